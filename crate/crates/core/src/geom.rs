//! Shared geometric primitives: 3-vectors and the scene bounding box.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// A 3-component vector in scene units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn length(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let len = self.length();
        if len == 0.0 {
            Vec3::ZERO
        } else {
            self * (1.0 / len)
        }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn component(self, c: usize) -> f64 {
        match c {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("vector component index {c} out of range"),
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// Axis-aligned scene bounding box. Molecule positions in noise space
/// ([0,1] per component) are mapped affinely into this box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneBox {
    pub min: Vec3,
    pub size: Vec3,
}

impl SceneBox {
    /// Box of the given extents centered on the origin.
    pub fn centered(size: Vec3) -> Self {
        SceneBox { min: size * -0.5, size }
    }

    pub fn max(&self) -> Vec3 {
        self.min + self.size
    }

    /// Affine map from unit-cube coordinates to scene units.
    pub fn map_unit(&self, u: Vec3) -> Vec3 {
        Vec3::new(
            self.min.x + u.x * self.size.x,
            self.min.y + u.y * self.size.y,
            self.min.z + u.z * self.size.z,
        )
    }

    /// Clamp a point into the box, shrunk by `margin` on every side.
    pub fn clamp_with_margin(&self, p: Vec3, margin: Vec3) -> Vec3 {
        let max = self.max();
        Vec3::new(
            p.x.clamp(self.min.x + margin.x, max.x - margin.x),
            p.y.clamp(self.min.y + margin.y, max.y - margin.y),
            p.z.clamp(self.min.z + margin.z, max.z - margin.z),
        )
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let max = self.max();
        p.x >= self.min.x
            && p.x <= max.x
            && p.y >= self.min.y
            && p.y <= max.y
            && p.z >= self.min.z
            && p.z <= max.z
    }
}
