//! Per-molecule positions over time: Brownian context motion with geometric
//! trajectory smoothing, and the scripted focus-pair reaction.
//!
//! A context molecule's coordinate is a nested noise evaluation
//! `n(S + t*v + (1 - tau) * n(S + t*v))`, where `S` is a per-(molecule,
//! component) lattice offset, `v` the ground-truth speed and `tau` the
//! smoothing factor. `tau = 0` gives the fully jittered Brownian
//! approximation, `tau = 1` removes the nested term entirely and yields the
//! geometrically smoothed trajectory.

use crate::error::{Error, Result};
use crate::geom::{SceneBox, Vec3};
use crate::noise::NoiseField;
use serde::{Deserialize, Serialize};

/// Default per-component lattice stride (coprime to the molecule stride).
pub const DEFAULT_COMPONENT_STRIDE: u64 = 101_159;
/// Default per-molecule lattice stride (prime, < 2^23 so offsets for a
/// thousand molecules stay well inside exact f64 integer range).
pub const DEFAULT_MOLECULE_STRIDE: u64 = 8_388_593;

/// Ground-truth speed and smoothing parameters for context motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    /// Ground-truth speed `v`, noise-domain units per second.
    pub speed: f64,
    /// Geometric smoothing factor `tau` in [0, 1].
    pub tau: f64,
    /// Lattice offset between vector components of one molecule.
    pub component_stride: u64,
    /// Lattice offset between molecules.
    pub molecule_stride: u64,
}

impl MotionParams {
    pub fn new(speed: f64, tau: f64) -> Self {
        MotionParams {
            speed,
            tau,
            component_stride: DEFAULT_COMPONENT_STRIDE,
            molecule_stride: DEFAULT_MOLECULE_STRIDE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(Error::Config(format!("speed must be positive, got {}", self.speed)));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau must be in [0,1], got {}", self.tau)));
        }
        if self.component_stride == 0 || self.molecule_stride == 0 {
            return Err(Error::Config("strides must be positive".into()));
        }
        Ok(())
    }

    fn with_tau(self, tau: f64) -> Self {
        MotionParams { tau, ..self }
    }
}

/// Noise field plus motion parameters; evaluates trajectories.
#[derive(Debug, Clone, Copy)]
pub struct MotionModel {
    pub noise: NoiseField,
    pub params: MotionParams,
}

impl MotionModel {
    pub fn new(noise: NoiseField, params: MotionParams) -> Self {
        MotionModel { noise, params }
    }

    /// Lattice offset decorrelating molecules and vector components.
    ///
    /// A literal `component * molecule` seed would collapse every molecule
    /// onto one path for component 0, so each (molecule, component) pair is
    /// instead offset by coprime strides. All intermediate values stay exact
    /// integers in f64.
    #[inline]
    pub fn seed_offset(&self, molecule: u32, component: usize) -> f64 {
        debug_assert!(component < 3);
        (component as f64 + 1.0) * self.params.component_stride as f64
            + molecule as f64 * self.params.molecule_stride as f64
    }

    /// One noise-domain coordinate of a context molecule, in [0, 1].
    #[inline]
    pub fn context_coord(&self, molecule: u32, component: usize, t: f64) -> f64 {
        let s = self.seed_offset(molecule, component) + t * self.params.speed;
        let inner = self.noise.sample(s);
        self.noise.sample(s + (1.0 - self.params.tau) * inner)
    }

    /// Context molecule position mapped into the scene box.
    #[inline]
    pub fn context_position(&self, molecule: u32, t: f64, scene_box: &SceneBox) -> Vec3 {
        let u = Vec3::new(
            self.context_coord(molecule, 0, t),
            self.context_coord(molecule, 1, t),
            self.context_coord(molecule, 2, t),
        );
        scene_box.map_unit(u)
    }
}

/// Reaction phase at a given animation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReactionPhase {
    Before,
    Attract,
    Bond,
    Repulse,
    After,
}

/// Choreography of the single scripted reaction: which molecules react,
/// when, where, and how they sit relative to each other while bonded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionScript {
    pub partner_a: u32,
    pub partner_b: u32,
    /// Reaction start time in seconds (drawn uniformly from [5, 10]).
    pub t_start: f64,
    pub d_attract: f64,
    pub d_bond: f64,
    pub d_repulse: f64,
    /// Reaction position in scene units.
    pub target: Vec3,
    /// Rigid offset between the partners while bonded; partner a sits at
    /// +offset/2, partner b at -offset/2.
    pub bond_offset: Vec3,
    /// Virtual molecule index driving the shared Brownian path of the
    /// bonded pair.
    pub pair_path_id: u32,
}

impl ReactionScript {
    /// Late starts may push the repulsion phase past the end of the video;
    /// the phase is simply cut off there, so only the start range and phase
    /// durations are checked.
    pub fn validate(&self) -> Result<()> {
        if self.partner_a == self.partner_b {
            return Err(Error::Config("reaction partners must differ".into()));
        }
        if !(5.0..=10.0).contains(&self.t_start) {
            return Err(Error::Config(format!("t_start {} outside [5,10]", self.t_start)));
        }
        if self.d_attract <= 0.0 || self.d_bond <= 0.0 || self.d_repulse <= 0.0 {
            return Err(Error::Config("reaction phase durations must be positive".into()));
        }
        Ok(())
    }

    pub fn phase_at(&self, t: f64) -> ReactionPhase {
        let rel = t - self.t_start;
        if rel < 0.0 {
            ReactionPhase::Before
        } else if rel < self.d_attract {
            ReactionPhase::Attract
        } else if rel < self.d_attract + self.d_bond {
            ReactionPhase::Bond
        } else if rel < self.d_attract + self.d_bond + self.d_repulse {
            ReactionPhase::Repulse
        } else {
            ReactionPhase::After
        }
    }

    pub fn is_partner(&self, molecule: u32) -> bool {
        molecule == self.partner_a || molecule == self.partner_b
    }

    fn side(&self, molecule: u32) -> Result<f64> {
        if molecule == self.partner_a {
            Ok(0.5)
        } else if molecule == self.partner_b {
            Ok(-0.5)
        } else {
            Err(Error::NotReactionPartner(molecule))
        }
    }

    /// Wandering bond anchor at time `t` (seconds since bond start),
    /// clamped so both partners stay inside the scene box.
    fn bond_anchor(&self, model: &MotionModel, t: f64, scene_box: &SceneBox) -> Vec3 {
        let t0 = self.t_start + self.d_attract;
        let shared_now = model.context_position(self.pair_path_id, t, scene_box);
        let shared_start = model.context_position(self.pair_path_id, t0, scene_box);
        let margin = Vec3::new(
            self.bond_offset.x.abs() * 0.5,
            self.bond_offset.y.abs() * 0.5,
            self.bond_offset.z.abs() * 0.5,
        );
        scene_box.clamp_with_margin(self.target + shared_now - shared_start, margin)
    }
}

#[inline]
fn smoothstep01(x: f64) -> f64 {
    let t = x.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

#[inline]
fn blend(a: Vec3, b: Vec3, w: f64) -> Vec3 {
    a * (1.0 - w) + b * w
}

/// Position of a focus (reacting) molecule at time `t`.
///
/// Outside the reaction window this is the plain unsmoothed context path;
/// inside, the random path is blended with the reaction choreography. Focus
/// elements never receive geometric smoothing, so `tau` is forced to zero
/// regardless of the context setting.
pub fn focus_position(
    model: &MotionModel,
    molecule: u32,
    t: f64,
    script: &ReactionScript,
    scene_box: &SceneBox,
) -> Result<Vec3> {
    let side = script.side(molecule)?;
    let unsmoothed = MotionModel::new(model.noise, model.params.with_tau(0.0));
    let random = unsmoothed.context_position(molecule, t, scene_box);
    let offset = script.bond_offset * side;

    let p = match script.phase_at(t) {
        ReactionPhase::Before | ReactionPhase::After => random,
        ReactionPhase::Attract => {
            let w = smoothstep01((t - script.t_start) / script.d_attract);
            blend(random, script.target + offset, w)
        }
        ReactionPhase::Bond => script.bond_anchor(&unsmoothed, t, scene_box) + offset,
        ReactionPhase::Repulse => {
            let bond_end = script.t_start + script.d_attract + script.d_bond;
            let anchor = script.bond_anchor(&unsmoothed, bond_end, scene_box) + offset;
            let w = 1.0 - smoothstep01((t - bond_end) / script.d_repulse);
            blend(random, anchor, w)
        }
    };
    Ok(p)
}

/// Monte Carlo estimate of the mean per-frame displacement, in scene units.
///
/// Averages `|p(t + dt) - p(t)|` over `n_molecules` independent context
/// trajectories and `n_frames` steps at the given frame rate. Used to
/// calibrate the motion-blur window so trail lengths are expressed in world
/// space. Deterministic given the noise seed.
pub fn displacement_stats(
    noise: NoiseField,
    params: &MotionParams,
    scene_box: &SceneBox,
    n_molecules: u32,
    n_frames: u32,
    frame_rate: f64,
) -> f64 {
    assert!(n_molecules > 0 && n_frames > 0 && frame_rate > 0.0);
    let model = MotionModel::new(noise, *params);
    let dt = 1.0 / frame_rate;
    let mut total = 0.0;
    for molecule in 0..n_molecules {
        let mut prev = model.context_position(molecule, 0.0, scene_box);
        for frame in 1..=n_frames {
            let next = model.context_position(molecule, frame as f64 * dt, scene_box);
            total += (next - prev).length();
            prev = next;
        }
    }
    total / (n_molecules as f64 * n_frames as f64)
}
