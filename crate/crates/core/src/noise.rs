//! Deterministic 1-D value noise over the integer lattice.
//!
//! This is the single randomness source behind all molecular motion. Lattice
//! values come from an integer hash (no floating point in the hash path), so
//! the same seed produces bit-identical trajectories on every platform.

use serde::{Deserialize, Serialize};

/// Interpolation kernel between lattice values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingKernel {
    /// Cubic smoothstep 3t^2 - 2t^3 (C1 at lattice points).
    Cubic,
    /// Quintic smoothstep 6t^5 - 15t^4 + 10t^3 (C2 at lattice points).
    #[default]
    Quintic,
}

impl SmoothingKernel {
    #[inline]
    fn apply(self, t: f64) -> f64 {
        match self {
            SmoothingKernel::Cubic => t * t * (3.0 - 2.0 * t),
            SmoothingKernel::Quintic => t * t * t * (t * (t * 6.0 - 15.0) + 10.0),
        }
    }
}

/// Continuous random noise over the real line with values in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseField {
    pub seed: u64,
    #[serde(default)]
    pub kernel: SmoothingKernel,
}

/// splitmix64 finalizer; the standard 64-bit avalanche mixer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl NoiseField {
    pub fn new(seed: u64) -> Self {
        NoiseField { seed, kernel: SmoothingKernel::default() }
    }

    pub fn with_kernel(seed: u64, kernel: SmoothingKernel) -> Self {
        NoiseField { seed, kernel }
    }

    /// Uniform value in [0, 1) at integer lattice point `k`.
    ///
    /// Stateless: repeated calls with the same `(seed, k)` always return
    /// the same value.
    #[inline]
    pub fn hash_lattice(&self, k: i64) -> f64 {
        let h = mix64(self.seed ^ (k as u64));
        // Top 53 bits -> exact dyadic rational in [0, 1).
        (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Continuous noise value at real coordinate `s`, in [0, 1].
    ///
    /// Exactly equals `hash_lattice(k)` at integer `k`. Panics on non-finite
    /// input; the motion model never produces one.
    #[inline]
    pub fn sample(&self, s: f64) -> f64 {
        assert!(s.is_finite(), "noise coordinate must be finite, got {s}");
        let cell = s.floor();
        let t = s - cell;
        let k = cell as i64;
        let a = self.hash_lattice(k);
        let b = self.hash_lattice(k.wrapping_add(1));
        let w = self.kernel.apply(t);
        a + (b - a) * w
    }
}
