//! Planar points and triangle measures.
//!
//! Coordinates are `(x, z)`: `x` along the structure, `z` vertical. All
//! routines are generic over [`Scalar`] so they can be exercised in `f32`
//! as well as `f64`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2<T> {
    pub x: T,
    pub z: T,
}

impl<T: Scalar> Point2<T> {
    #[inline]
    pub fn new(x: T, z: T) -> Self {
        Self { x, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.z * other.z
    }

    /// z-component of the 2D cross product.
    #[inline]
    pub fn cross(self, other: Self) -> T {
        self.x * other.z - self.z * other.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.z)
    }

    #[inline]
    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    #[inline]
    pub fn midpoint(self, other: Self) -> Self {
        let half = T::lit(0.5);
        Self::new((self.x + other.x) * half, (self.z + other.z) * half)
    }

    #[inline]
    pub fn component(self, axis: usize) -> T {
        if axis == 0 {
            self.x
        } else {
            self.z
        }
    }

    pub fn cast<U: Scalar>(self) -> Point2<U> {
        Point2::new(
            U::from_f64(self.x.to_f64().unwrap()).unwrap(),
            U::from_f64(self.z.to_f64().unwrap()).unwrap(),
        )
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.z + rhs.z)
    }
}

impl<T: Scalar> AddAssign for Point2<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x = self.x + rhs.x;
        self.z = self.z + rhs.z;
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.z - rhs.z)
    }
}

impl<T: Scalar> SubAssign for Point2<T> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.x = self.x - rhs.x;
        self.z = self.z - rhs.z;
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.z * s)
    }
}

impl<T: Scalar> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.z)
    }
}

// Serialized as a bare `[x, z]` pair.
impl<T: Serialize> Serialize for Point2<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [&self.x, &self.z].serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Point2<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, z] = <[T; 2]>::deserialize(d)?;
        Ok(Point2 { x, z })
    }
}

/// Signed area of the triangle `(a, b, c)`; positive when counterclockwise.
#[inline]
pub fn signed_area<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b - a).cross(c - a) * T::lit(0.5)
}

/// Circumradius, inradius and orientation of one triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleQuality<T> {
    pub circumradius: T,
    pub inradius: T,
    /// `circumradius / inradius`; infinite for degenerate triangles.
    pub ratio: T,
    pub signed_area: T,
    pub degenerate: bool,
}

/// Measures a triangle from its three edge lengths.
///
/// The circumradius uses the product of the edge lengths over the
/// Heron-type product of perimeter factors, the inradius is
/// `sqrt(a (a - l_ij)(a - l_jk)(a - l_ik)) / a` with the semiperimeter `a`.
/// Zero-area triangles are flagged rather than rejected.
pub fn triangle_quality<T: Scalar>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> TriangleQuality<T> {
    let l_ij = a.distance(b);
    let l_jk = b.distance(c);
    let l_ik = a.distance(c);
    let area = signed_area(a, b, c);

    let heron = (l_ij + l_jk + l_ik)
        * (l_ij + l_jk - l_ik)
        * (l_ij - l_jk + l_ik)
        * (-l_ij + l_jk + l_ik);
    let semi = T::lit(0.5) * (l_ij + l_jk + l_ik);
    let inner = semi * (semi - l_ij) * (semi - l_jk) * (semi - l_ik);

    let scale = l_ij.max(l_jk).max(l_ik);
    let degenerate = !(scale > T::zero())
        || area.abs() <= T::lit(16.0) * T::eps() * scale * scale
        || heron <= T::zero()
        || inner <= T::zero();

    if degenerate {
        return TriangleQuality {
            circumradius: T::infinity(),
            inradius: T::zero(),
            ratio: T::infinity(),
            signed_area: area,
            degenerate: true,
        };
    }

    let circumradius = l_ij * l_jk * l_ik / heron.sqrt();
    let inradius = inner.sqrt() / semi;
    TriangleQuality {
        circumradius,
        inradius,
        ratio: circumradius / inradius,
        signed_area: area,
        degenerate: false,
    }
}
