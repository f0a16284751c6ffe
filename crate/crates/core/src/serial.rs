//! Serde adapters that store dense `f64` data as base64-encoded
//! little-endian blobs inside JSON documents.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use faer::Mat;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

fn encode(values: impl Iterator<Item = f64>) -> String {
    let bytes: Vec<u8> = values.flat_map(f64::to_le_bytes).collect();
    STANDARD.encode(bytes)
}

fn decode(text: &str, expected: usize) -> Result<Vec<f64>, String> {
    let bytes = STANDARD.decode(text).map_err(|e| e.to_string())?;
    if bytes.len() != 8 * expected {
        return Err(format!("blob holds {} bytes, expected {}", bytes.len(), 8 * expected));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[derive(Serialize, Deserialize)]
struct MatBlob {
    rows: usize,
    cols: usize,
    /// Column-major.
    data: String,
}

/// `#[serde(with = "crate::serial::mat")]`
pub mod mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Mat<f64>, s: S) -> Result<S::Ok, S::Error> {
        let data = encode((0..m.ncols()).flat_map(|j| (0..m.nrows()).map(move |i| m[(i, j)])));
        MatBlob {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat<f64>, D::Error> {
        let blob = MatBlob::deserialize(d)?;
        let v = decode(&blob.data, blob.rows * blob.cols).map_err(D::Error::custom)?;
        Ok(Mat::from_fn(blob.rows, blob.cols, |i, j| v[j * blob.rows + i]))
    }
}

/// `#[serde(with = "crate::serial::mats")]` for `Vec<Mat<f64>>`.
pub mod mats {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::mat")] Mat<f64>);

    pub fn serialize<S: Serializer>(m: &[Mat<f64>], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Wrap> = m.iter().map(|m| Wrap(m.clone())).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Mat<f64>>, D::Error> {
        let v = Vec::<Wrap>::deserialize(d)?;
        Ok(v.into_iter().map(|w| w.0).collect())
    }
}

/// `#[serde(with = "crate::serial::vec")]`
pub mod vec {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct VecBlob {
        len: usize,
        data: String,
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        VecBlob {
            len: v.len(),
            data: encode(v.iter().copied()),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let blob = VecBlob::deserialize(d)?;
        decode(&blob.data, blob.len).map_err(D::Error::custom)
    }
}
