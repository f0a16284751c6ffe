use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{Axis, Material, NodalDof};
use crate::mesh::{GeometryCase, GeometryParams, BEAM_HEIGHT, PLATE_SIZE};
use crate::pmor::{Hyperparameters, InterpMode};
use crate::Point;

/// Model-building method compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "saeh")]
    Saeh,
    #[serde(rename = "rbf")]
    Rbf,
    #[serde(rename = "zero-pad")]
    ZeroPad,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Saeh => "saeh",
            Method::Rbf => "rbf",
            Method::ZeroPad => "zero-pad",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "saeh" => Ok(Method::Saeh),
            "rbf" => Ok(Method::Rbf),
            "zero-pad" => Ok(Method::ZeroPad),
            other => Err(Error::InvalidInput(format!(
                "unknown method `{other}` (expected saeh, rbf or zero-pad)"
            ))),
        }
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out: Vec<Method> = s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Frequency grid in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrequencyGrid {
    Step { start: f64, stop: f64, step: f64 },
    Linspace { start: f64, stop: f64, count: usize },
}

impl FrequencyGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v: Vec<f64> = match *self {
            FrequencyGrid::Step { start, stop, step } => {
                if !(step > 0.0) {
                    return Err(Error::InvalidInput(format!("frequency step must be positive, got {step}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + step * i as f64).collect()
            }
            FrequencyGrid::Linspace { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect(),
            },
        };
        if v.is_empty() || v[0] <= 0.0 || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("frequency grid must be positive and ascending".into()));
        }
        Ok(v)
    }
}

/// Plate corner used to place loads and outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    BottomLeft,
    BottomRight,
    TopLeft,
    TopRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub anchor: Anchor,
    pub direction: Axis,
}

impl Probe {
    pub fn at(&self, params: &GeometryParams) -> NodalDof {
        let (w, h) = match params.case {
            GeometryCase::BeamPlate => (params.p[0], BEAM_HEIGHT),
            _ => (PLATE_SIZE, PLATE_SIZE),
        };
        let p = match self.anchor {
            Anchor::BottomLeft => Point::new(0.0, 0.0),
            Anchor::BottomRight => Point::new(w, 0.0),
            Anchor::TopLeft => Point::new(0.0, h),
            Anchor::TopRight => Point::new(w, h),
        };
        NodalDof::new(p, self.direction)
    }
}

/// Ordering checks on morph and transfer wall-clock times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub reference: Vec<f64>,
    pub target: Vec<f64>,
    /// Number of basis vectors transferred.
    pub vectors: usize,
}

/// Acceptance thresholds evaluated by `run --check`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Checks {
    pub max_mean_mre: Option<f64>,
    pub max_mre: Option<f64>,
    pub min_samples: Option<usize>,
    pub max_samples: Option<usize>,
    pub min_clusters: Option<usize>,
    pub max_clusters: Option<usize>,
    /// Zero-padding mean MRE over the morph-based mean MRE.
    pub min_baseline_ratio: Option<f64>,
    pub min_baseline_mre: Option<f64>,
    pub points: Vec<PointCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub p: Vec<f64>,
    pub max_mre: f64,
}

fn default_scale() -> f64 {
    1.0
}
fn default_steps() -> usize {
    10
}
fn default_rbf_order() -> u32 {
    1
}
fn default_budget() -> usize {
    500
}
fn default_lambda() -> f64 {
    1e-5
}
fn default_methods() -> Vec<Method> {
    vec![Method::Saeh, Method::Rbf, Method::ZeroPad]
}

/// One experiment, read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub case: GeometryCase,
    /// Element size at scale 1.0, in metres.
    pub mesh_size: f64,
    /// Mesh density factor in `(0, 1]`; the element size is `mesh_size / scale`.
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "Material::steel_plate")]
    pub material: Material,
    pub fixed_group: String,
    pub input: Probe,
    pub output: Probe,
    pub frequencies: FrequencyGrid,
    /// Reduced order.
    pub order: usize,
    pub hyper: Hyperparameters,
    pub interpolation: InterpMode,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Upper bound on the number of samples per sampling run.
    #[serde(default = "default_budget")]
    pub max_samples: usize,
    #[serde(default = "default_steps")]
    pub saeh_steps: usize,
    #[serde(default = "default_rbf_order")]
    pub rbf_order: u32,
    /// Test points per parameter dimension.
    pub test_grid: Vec<usize>,
    /// Additional test points.
    #[serde(default)]
    pub extra_test_points: Vec<Vec<f64>>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub timing: Option<TimingConfig>,
    #[serde(default)]
    pub checks: Checks,
}

impl Experiment {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let exp: Experiment = serde_json::from_str(&text)?;
        exp.validate()?;
        Ok(exp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::InvalidInput(format!("scale must lie in (0, 1], got {}", self.scale)));
        }
        if !(self.mesh_size > 0.0) {
            return Err(Error::InvalidInput("mesh size must be positive".into()));
        }
        if self.order == 0 {
            return Err(Error::InvalidInput("reduced order must be positive".into()));
        }
        self.material.validate()?;
        self.hyper.validate()?;
        self.frequencies.values()?;
        let dim = self.case.dim();
        if self.test_grid.len() != dim {
            return Err(Error::InvalidInput(format!(
                "test grid has {} dimensions, the case has {dim}",
                self.test_grid.len()
            )));
        }
        for p in &self.extra_test_points {
            GeometryParams::new(self.case, p.clone())?;
        }
        match (self.case.dim(), self.interpolation) {
            (1, InterpMode::Spline1d) | (2, InterpMode::Ridge2d) => Ok(()),
            _ => Err(Error::InvalidInput(format!(
                "{:?} interpolation does not fit a {dim}-parameter case",
                self.interpolation
            ))),
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.case.bounds().to_vec()
    }

    /// Element size used for meshing.
    pub fn element_size(&self) -> f64 {
        self.mesh_size / self.scale
    }

    /// Test points: a tensor grid over the bounds followed by the extra points.
    pub fn test_points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .bounds()
            .iter()
            .zip(&self.test_grid)
            .map(|(&(lo, hi), &n)| match n {
                0 => Vec::new(),
                1 => vec![0.5 * (lo + hi)],
                _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            })
            .collect();
        let mut pts = vec![Vec::new()];
        for axis in &axes {
            pts = pts
                .into_iter()
                .flat_map(|p: Vec<f64>| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        pts.extend(self.extra_test_points.iter().cloned());
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_grids() {
        let s = FrequencyGrid::Step { start: 1.0, stop: 5000.0, step: 1.0 }.values().unwrap();
        assert_eq!(s.len(), 5000);
        assert_eq!(s[4999], 5000.0);
        let l = FrequencyGrid::Linspace { start: 1.0, stop: 5000.0, count: 5000 }.values().unwrap();
        assert_eq!(l.len(), 5000);
        assert_eq!(l[4999], 5000.0);
        assert!(FrequencyGrid::Step { start: 0.0, stop: 2.0, step: 1.0 }.values().is_err());
    }

    #[test]
    fn methods_parse_and_sort() {
        assert_eq!(parse_methods("zero-pad,rbf,saeh,rbf").unwrap(), vec![Method::Saeh, Method::Rbf, Method::ZeroPad]);
        assert!(parse_methods("pod").is_err());
    }

    #[test]
    fn probes_follow_the_geometry() {
        let p = GeometryParams::beam(0.9).unwrap();
        let probe = Probe { anchor: Anchor::TopRight, direction: Axis::Z };
        assert_eq!(probe.at(&p).at, Point::new(0.9, BEAM_HEIGHT));
    }
}
