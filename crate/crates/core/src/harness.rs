//! Orchestration: the study's 2 x 5 condition matrix, deterministic
//! stimulus generation with JSON manifests, and the speed-perception
//! regression models.

use crate::config::{Config, FrameFormat};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::motion::{displacement_stats, focus_position, MotionModel, MotionParams, ReactionScript};
use crate::noise::NoiseField;
use crate::render::{frame_filename, render_frame, write_png_bytes, write_ppm_bytes, FrameBuffer, RenderLayer};
use crate::scene::{build_scene, shape_library, ScenePopulation};
use crate::smoothing::{echo_run, screen_blend, window_size, EchoParams, TrailSpec, DECIMATION_FACTOR};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::VecDeque;
use std::path::Path;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

// --- speed perception models -------------------------------------------

/// Which fitted regression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedModelKind {
    /// No smoothing of either kind.
    Baseline,
    /// Geometric motion smoothing on.
    Gms,
    /// Visual motion smoothing with trail length 2.
    VmsTrail2,
}

/// Fitted linear model of estimated speed as a function of ground truth
/// speed, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedModel {
    pub kind: SpeedModelKind,
    pub intercept: f64,
    pub slope: f64,
}

impl SpeedModel {
    pub fn of(kind: SpeedModelKind) -> SpeedModel {
        let (intercept, slope) = match kind {
            SpeedModelKind::Baseline => (30.4, 0.6),
            SpeedModelKind::Gms => (19.3, 0.6),
            SpeedModelKind::VmsTrail2 => (29.8, 0.4),
        };
        SpeedModel { kind, intercept, slope }
    }

    /// Unchecked affine evaluation. Compensated speeds legitimately exceed
    /// 100%, so this skips the domain check of [`estimated_speed`].
    pub fn line(&self, s: f64) -> f64 {
        self.intercept + self.slope * s
    }
}

/// Estimated perceived speed for a ground-truth speed `s` in [0, 100].
pub fn estimated_speed(s: f64, model: &SpeedModel) -> Result<f64> {
    if !(s.is_finite() && (0.0..=100.0).contains(&s)) {
        return Err(Error::SpeedOutOfRange(s));
    }
    Ok(model.line(s))
}

/// Compensated speed `cs = 1.5 (s + 1)`: the speed-up that makes trail-2
/// blur feel as fast as the unsmoothed baseline, i.e.
/// `line_vms2(cs(s)) == line_baseline(s)`.
pub fn compensate_speed(s: f64) -> f64 {
    1.5 * (s + 1.0)
}

// --- conditions ----------------------------------------------------------

/// Geometric-motion-smoothing switch; `tau` is the smoothing factor it
/// stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GmsMode {
    Off,
    On,
}

impl GmsMode {
    pub fn tau(self) -> f64 {
        match self {
            GmsMode::Off => 0.0,
            GmsMode::On => 1.0,
        }
    }
}

/// One cell of the study design, fully pinned down: smoothing settings,
/// speed level, per-stimulus seed, and the reaction choreography.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusCondition {
    pub gms: GmsMode,
    pub vms_trail: u32,
    pub speed_level: u8,
    pub seed: u64,
    pub reaction: ReactionScript,
}

impl StimulusCondition {
    /// Directory-name-safe label encoding the design cell and speed.
    pub fn label(&self) -> String {
        let gms = match self.gms {
            GmsMode::Off => "off",
            GmsMode::On => "on",
        };
        format!("gms-{gms}_trail-{}_speed-{}", self.vms_trail, self.speed_level)
    }

    pub fn validate(&self, config: &Config) -> Result<()> {
        TrailSpec::new(self.vms_trail)?;
        config.speed_for_level(self.speed_level)?;
        self.reaction.validate()?;
        Ok(())
    }
}

/// Deterministic sub-seed for one purpose (scene, reaction, noise, ...)
/// derived from a parent seed via independent ChaCha streams. Public so
/// embedders can rebuild a stimulus's layers from its manifest.
pub fn subseed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.gen()
}

pub const STREAM_MATRIX: u64 = 0x01;
pub const STREAM_SCENE: u64 = 0x02;
pub const STREAM_REACTION: u64 = 0x03;
pub const STREAM_NOISE: u64 = 0x04;

fn draw_reaction(
    config: &Config,
    stimulus_seed: u64,
    population: &ScenePopulation,
) -> ReactionScript {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(stimulus_seed, STREAM_REACTION));
    let t_start = rng.gen_range(5.0..=10.0);
    let b = &population.bounding_box;
    // Keep the reaction in the central 60% of the box so it stays on-screen.
    let target = Vec3::new(
        b.min.x + b.size.x * (0.2 + 0.6 * rng.gen::<f64>()),
        b.min.y + b.size.y * (0.2 + 0.6 * rng.gen::<f64>()),
        b.min.z + b.size.z * (0.2 + 0.6 * rng.gen::<f64>()),
    );
    // Uniform direction; the bonded pair sits slightly interpenetrating.
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r_xy = (1.0 - z * z).sqrt();
    let direction = Vec3::new(r_xy * phi.cos(), r_xy * phi.sin(), z);
    let (a, b_id) = population.focus_pair;
    let gap = 0.45
        * (population.molecule_type(a).bounding_diameter
            + population.molecule_type(b_id).bounding_diameter);
    ReactionScript {
        partner_a: a,
        partner_b: b_id,
        t_start,
        d_attract: 5.0,
        d_bond: 1.0,
        d_repulse: 5.0,
        target,
        bond_offset: direction * gap,
        pair_path_id: config.scene.n_molecules,
    }
}

/// Builds the condition for one design cell from its stimulus seed.
pub fn build_condition(
    config: &Config,
    gms: GmsMode,
    vms_trail: u32,
    speed_level: u8,
    seed: u64,
) -> Result<StimulusCondition> {
    TrailSpec::new(vms_trail)?;
    config.speed_for_level(speed_level)?;
    let population = build_scene(&config.scene, subseed(seed, STREAM_SCENE))?;
    let reaction = draw_reaction(config, seed, &population);
    Ok(StimulusCondition { gms, vms_trail, speed_level, seed, reaction })
}

/// The full study design: every (gms x trail) cell exactly once, in seeded
/// random order, each with a seeded-uniform speed level and its own
/// stimulus seed.
pub fn condition_matrix(config: &Config, master_seed: u64) -> Result<Vec<StimulusCondition>> {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(master_seed, STREAM_MATRIX));
    let mut cells = Vec::with_capacity(10);
    for gms in [GmsMode::Off, GmsMode::On] {
        for trail in 0..=4u32 {
            cells.push((gms, trail));
        }
    }
    cells.shuffle(&mut rng);
    cells
        .into_iter()
        .map(|(gms, trail)| {
            let speed_level = rng.gen_range(1..=4u8);
            let seed = rng.gen::<u64>();
            build_condition(config, gms, trail, speed_level, seed)
        })
        .collect()
}

// --- manifests -----------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactantInfo {
    pub id: u32,
    pub type_id: u8,
    pub color: [u8; 3],
}

/// First output-frame index at or after each reaction phase boundary
/// (clamped to the video length).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseWindows {
    pub attract_start: u32,
    pub bond_start: u32,
    pub repulse_start: u32,
    pub after_start: u32,
}

fn phase_windows(reaction: &ReactionScript, out_fps: f64, frame_count: u32) -> PhaseWindows {
    let index = |t: f64| ((t * out_fps).ceil() as u32).min(frame_count);
    let bond = reaction.t_start + reaction.d_attract;
    let repulse = bond + reaction.d_bond;
    let after = repulse + reaction.d_repulse;
    PhaseWindows {
        attract_start: index(reaction.t_start),
        bond_start: index(bond),
        repulse_start: index(repulse),
        after_start: index(after),
    }
}

/// Everything needed to audit or bit-identically regenerate one stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusManifest {
    pub schema_version: u32,
    pub condition: StimulusCondition,
    /// Ground-truth speed in noise units per second.
    pub speed_value: f64,
    /// Ground-truth speed as a percentage of the level range.
    pub speed_percent: f64,
    pub tau: f64,
    pub d_mol: f64,
    /// Calibrated mean per-frame displacement (scene units).
    pub mean_displacement: f64,
    pub n_window: u32,
    pub width: u32,
    pub height: u32,
    pub output_frame_rate: u32,
    pub frame_count: u32,
    pub format: FrameFormat,
    pub reactants: [ReactantInfo; 2],
    pub phase_windows: PhaseWindows,
    /// SHA-256 of each output frame's raw 8-bit RGB bytes, in frame order
    /// (independent of the container format's compression).
    pub frame_hashes: Vec<String>,
}

/// One line of the batch index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub directory: String,
    pub condition: StimulusCondition,
    pub mean_displacement: f64,
    pub n_window: u32,
    /// SHA-256 over the stimulus's concatenated frame hashes; absent for
    /// dry runs.
    pub content_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub schema_version: u32,
    pub master_seed: u64,
    pub dry_run: bool,
    pub config: Config,
    pub stimuli: Vec<BatchEntry>,
}

/// SHA-256 of a frame's raw RGB bytes, as lowercase hex.
pub fn rgb8_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

// --- calibration ---------------------------------------------------------

/// Blur calibration for one (speed level, tau) setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub mean_displacement: f64,
    pub d_mol: f64,
    /// Echo window for trail lengths 0..=4.
    pub windows: [u32; 5],
}

/// Monte Carlo blur calibration: measures the mean per-frame displacement
/// for the stimulus's exact motion settings and derives the echo window
/// for every trail length.
pub fn calibrate(config: &Config, stimulus_seed: u64, speed_level: u8, tau: f64) -> Result<Calibration> {
    let speed = config.speed_for_level(speed_level)?;
    let params = MotionParams {
        speed,
        tau,
        component_stride: config.motion.component_stride,
        molecule_stride: config.motion.molecule_stride,
    };
    params.validate()?;
    let noise = NoiseField::with_kernel(subseed(stimulus_seed, STREAM_NOISE), config.motion.kernel);
    let scene_box = config.scene.scene_box();
    let mean_displacement = displacement_stats(
        noise,
        &params,
        &scene_box,
        config.smoothing.calibration_molecules,
        config.smoothing.calibration_frames,
        config.render.frame_rate as f64,
    );
    let types = shape_library(config.scene.molecule_diameter, config.scene.n_types);
    let d_mol = types.iter().map(|t| t.bounding_diameter).sum::<f64>() / types.len() as f64;
    let mut windows = [1u32; 5];
    for (trail, slot) in windows.iter_mut().enumerate() {
        *slot = window_size(TrailSpec::new(trail as u32)?, d_mol, mean_displacement)?.n_window;
    }
    Ok(Calibration { mean_displacement, d_mol, windows })
}

// --- stimulus generation -------------------------------------------------

/// Renders frames ahead of the echo stream in parallel chunks. Frames are
/// pure functions of their index, so the chunk size (and thread count)
/// cannot change the output.
struct Prefetch<'a> {
    render: &'a (dyn Fn(u32) -> Result<FrameBuffer> + Sync),
    buffer: VecDeque<FrameBuffer>,
    next: u32,
    total: u32,
    chunk: u32,
}

impl<'a> Prefetch<'a> {
    fn new(total: u32, render: &'a (dyn Fn(u32) -> Result<FrameBuffer> + Sync)) -> Self {
        let chunk = (rayon::current_num_threads().max(1) as u32 * 2).min(total.max(1));
        Prefetch { render, buffer: VecDeque::new(), next: 0, total, chunk }
    }

    fn get(&mut self, index: u32) -> Result<FrameBuffer> {
        debug_assert_eq!(index, self.next, "echo must pull frames in order");
        if self.buffer.is_empty() {
            let end = (self.next + self.chunk).min(self.total);
            let rendered: Vec<Result<FrameBuffer>> =
                (self.next..end).into_par_iter().map(|i| (self.render)(i)).collect();
            for frame in rendered {
                self.buffer.push_back(frame?);
            }
        }
        self.next += 1;
        Ok(self.buffer.pop_front().expect("prefetch underrun"))
    }
}

/// Generates one stimulus: 120 fps two-layer rendering, per-stimulus blur
/// calibration, echo on the context layer, screen-blend compositing,
/// 30 fps decimation, frame files plus `manifest.json` in `out_dir`.
pub fn generate_stimulus(
    config: &Config,
    condition: &StimulusCondition,
    out_dir: &Path,
) -> Result<StimulusManifest> {
    config.validate()?;
    condition.validate(config)?;

    let mut population = build_scene(&config.scene, subseed(condition.seed, STREAM_SCENE))?;
    let reaction = &condition.reaction;
    let n_molecules = population.molecules.len() as u32;
    if reaction.partner_a >= n_molecules || reaction.partner_b >= n_molecules {
        return Err(Error::Config(format!(
            "reaction partners ({}, {}) outside the population of {}",
            reaction.partner_a, reaction.partner_b, n_molecules
        )));
    }
    // The script owns the focus roles so a manifest round-trips even if
    // its condition was edited by hand.
    population.focus_pair = (reaction.partner_a, reaction.partner_b);
    let type_a = population.molecules[reaction.partner_a as usize].type_id;
    let type_b = population.molecules[reaction.partner_b as usize].type_id;
    if type_a == type_b {
        return Err(Error::Config(format!(
            "reaction partners must have distinct types, both are {type_a}"
        )));
    }
    if !population.bounding_box.contains(reaction.target) {
        return Err(Error::Config("reaction target outside the scene box".into()));
    }

    let camera = config.camera()?;
    let tau = condition.gms.tau();
    let calibration = calibrate(config, condition.seed, condition.speed_level, tau)?;
    let echo_params = EchoParams { n_window: calibration.windows[condition.vms_trail as usize] };
    let speed = config.speed_for_level(condition.speed_level)?;
    let params = MotionParams {
        speed,
        tau,
        component_stride: config.motion.component_stride,
        molecule_stride: config.motion.molecule_stride,
    };
    let noise = NoiseField::with_kernel(subseed(condition.seed, STREAM_NOISE), config.motion.kernel);
    let model = MotionModel::new(noise, params);
    let scene_box = population.bounding_box;
    let fps = config.render.frame_rate as f64;
    let total = config.total_input_frames();
    let format = config.render.format;

    let positions_at = |t: f64| -> Result<Vec<Vec3>> {
        population
            .molecules
            .iter()
            .map(|m| {
                if population.is_focus(m.id) {
                    focus_position(&model, m.id, t, reaction, &scene_box)
                } else {
                    Ok(model.context_position(m.id, t, &scene_box))
                }
            })
            .collect()
    };
    let render_layer = |i: u32, layer: RenderLayer| -> Result<FrameBuffer> {
        let positions = positions_at(i as f64 / fps)?;
        Ok(render_frame(&population, &positions, layer, &camera))
    };
    let render_context = |i: u32| render_layer(i, RenderLayer::ContextWithFocusMask);

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    // The window's incoming and outgoing sides each re-render their frames
    // (bit-identically) instead of buffering the whole window, keeping
    // memory flat however wide the blur gets.
    let mut add_prefetch = Prefetch::new(total, &render_context);
    let mut sub_prefetch = Prefetch::new(total, &render_context);
    let mut frame_hashes = Vec::with_capacity(total as usize / DECIMATION_FACTOR + 1);
    echo_run(
        total as usize,
        &echo_params,
        |i| add_prefetch.get(i as u32),
        |i| sub_prefetch.get(i as u32),
        |t, blurred| {
            if t % DECIMATION_FACTOR != 0 {
                return Ok(());
            }
            let focus = render_layer(t as u32, RenderLayer::FocusOnly)?;
            let composed = screen_blend(blurred, &focus)?;
            let rgb8 = composed.to_srgb8();
            frame_hashes.push(rgb8_hash(&rgb8));
            let out_index = (t / DECIMATION_FACTOR) as u32;
            let path = out_dir.join(frame_filename(out_index, format.extension()));
            match format {
                FrameFormat::Png => {
                    write_png_bytes(&path, camera.width, camera.height, &rgb8)
                }
                FrameFormat::Ppm => {
                    write_ppm_bytes(&path, camera.width, camera.height, &rgb8)
                }
            }
        },
    )?;

    let frame_count = frame_hashes.len() as u32;
    let out_fps = fps / DECIMATION_FACTOR as f64;
    let reactant = |id: u32| -> ReactantInfo {
        let type_id = population.molecules[id as usize].type_id;
        ReactantInfo { id, type_id, color: population.types[type_id as usize].color }
    };
    let manifest = StimulusManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        condition: condition.clone(),
        speed_value: speed,
        speed_percent: Config::speed_percent(condition.speed_level)?,
        tau,
        d_mol: population.d_mol,
        mean_displacement: calibration.mean_displacement,
        n_window: echo_params.n_window,
        width: camera.width,
        height: camera.height,
        output_frame_rate: out_fps.round() as u32,
        frame_count,
        format,
        reactants: [reactant(reaction.partner_a), reactant(reaction.partner_b)],
        phase_windows: phase_windows(reaction, out_fps, frame_count),
        frame_hashes,
    };
    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Manifest(e.to_string()))?;
    std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

/// Runs the whole study batch: ten stimuli (or, for a dry run, just their
/// calibrations) plus a `batch.json` index under `out_root`.
pub fn batch(
    config: &Config,
    master_seed: u64,
    out_root: &Path,
    dry_run: bool,
) -> Result<BatchManifest> {
    config.validate()?;
    let conditions = condition_matrix(config, master_seed)?;
    std::fs::create_dir_all(out_root).map_err(|e| Error::io(out_root, e))?;
    let mut stimuli = Vec::with_capacity(conditions.len());
    for condition in conditions {
        let directory = condition.label();
        let entry = if dry_run {
            let calibration =
                calibrate(config, condition.seed, condition.speed_level, condition.gms.tau())?;
            BatchEntry {
                directory,
                mean_displacement: calibration.mean_displacement,
                n_window: calibration.windows[condition.vms_trail as usize],
                content_digest: None,
                condition,
            }
        } else {
            let manifest = generate_stimulus(config, &condition, &out_root.join(&directory))?;
            BatchEntry {
                directory,
                mean_displacement: manifest.mean_displacement,
                n_window: manifest.n_window,
                content_digest: Some(rgb8_hash(manifest.frame_hashes.join("").as_bytes())),
                condition,
            }
        };
        stimuli.push(entry);
    }
    let manifest = BatchManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        master_seed,
        dry_run,
        config: config.clone(),
        stimuli,
    };
    let path = out_root.join("batch.json");
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Manifest(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_constants_match_the_fits() {
        let cases = [
            (SpeedModelKind::Baseline, 0.0, 30.4),
            (SpeedModelKind::Baseline, 50.0, 60.4),
            (SpeedModelKind::Baseline, 100.0, 90.4),
            (SpeedModelKind::Gms, 0.0, 19.3),
            (SpeedModelKind::Gms, 100.0, 79.3),
            (SpeedModelKind::VmsTrail2, 50.0, 49.8),
            (SpeedModelKind::VmsTrail2, 100.0, 69.8),
        ];
        for (kind, s, expected) in cases {
            let es = estimated_speed(s, &SpeedModel::of(kind)).unwrap();
            assert!((es - expected).abs() < 1e-12, "{kind:?} at {s}: {es} vs {expected}");
        }
    }

    #[test]
    fn estimated_speed_rejects_out_of_range_input() {
        let model = SpeedModel::of(SpeedModelKind::Baseline);
        assert!(matches!(estimated_speed(-0.1, &model), Err(Error::SpeedOutOfRange(_))));
        assert!(estimated_speed(100.1, &model).is_err());
        assert!(estimated_speed(f64::NAN, &model).is_err());
        assert!(estimated_speed(0.0, &model).is_ok());
        assert!(estimated_speed(100.0, &model).is_ok());
    }

    #[test]
    fn compensation_formula_and_identity() {
        assert!((compensate_speed(0.0) - 1.5).abs() < 1e-12);
        assert!((compensate_speed(99.0) - 150.0).abs() < 1e-12);
        let baseline = SpeedModel::of(SpeedModelKind::Baseline);
        let vms2 = SpeedModel::of(SpeedModelKind::VmsTrail2);
        for i in 0..=100 {
            let s = i as f64;
            let gap = (vms2.line(compensate_speed(s)) - baseline.line(s)).abs();
            assert!(gap <= 1e-9, "s={s}: {gap}");
        }
    }

    #[test]
    fn matrix_covers_every_cell_exactly_once() {
        let config = Config::default();
        for seed in [0u64, 1, 42, 0xDEAD_BEEF] {
            let conditions = condition_matrix(&config, seed).unwrap();
            assert_eq!(conditions.len(), 10);
            let mut cells: Vec<(GmsMode, u32)> =
                conditions.iter().map(|c| (c.gms, c.vms_trail)).collect();
            cells.sort_by_key(|(g, t)| (matches!(g, GmsMode::On) as u32, *t));
            let expected: Vec<(GmsMode, u32)> = [GmsMode::Off, GmsMode::On]
                .into_iter()
                .flat_map(|g| (0..=4u32).map(move |t| (g, t)))
                .collect();
            assert_eq!(cells, expected, "seed {seed}");
            for c in &conditions {
                assert!((1..=4).contains(&c.speed_level));
                assert!((5.0..=10.0).contains(&c.reaction.t_start));
                c.validate(&config).unwrap();
            }
        }
    }

    #[test]
    fn matrix_is_deterministic_and_seed_sensitive() {
        let config = Config::default();
        let a = condition_matrix(&config, 7).unwrap();
        let b = condition_matrix(&config, 7).unwrap();
        assert_eq!(a, b);
        let c = condition_matrix(&config, 8).unwrap();
        assert_ne!(
            a.iter().map(|x| x.seed).collect::<Vec<_>>(),
            c.iter().map(|x| x.seed).collect::<Vec<_>>()
        );
    }

    #[test]
    fn speed_levels_are_roughly_uniform_across_seeds() {
        let config = Config::default();
        let mut counts = [0u32; 4];
        let seeds = 300;
        for seed in 0..seeds {
            for c in condition_matrix(&config, seed).unwrap() {
                counts[c.speed_level as usize - 1] += 1;
            }
        }
        let total = (seeds * 10) as f64;
        for (level, &count) in counts.iter().enumerate() {
            let freq = count as f64 / total;
            assert!(
                (freq - 0.25).abs() < 0.03,
                "level {}: frequency {freq}",
                level + 1
            );
        }
    }

    #[test]
    fn reaction_scripts_are_consistent_with_their_scene() {
        let config = Config::default();
        for c in condition_matrix(&config, 99).unwrap() {
            let pop = build_scene(&config.scene, subseed(c.seed, STREAM_SCENE)).unwrap();
            assert_eq!(pop.focus_pair, (c.reaction.partner_a, c.reaction.partner_b));
            assert!(pop.bounding_box.contains(c.reaction.target));
            assert_eq!(c.reaction.pair_path_id, config.scene.n_molecules);
            let gap = c.reaction.bond_offset.length();
            assert!(gap > 0.0 && gap < pop.d_mol * 1.5, "gap {gap}");
        }
    }

    #[test]
    fn labels_encode_the_design_cell() {
        let config = Config::default();
        let condition = build_condition(&config, GmsMode::On, 3, 2, 5).unwrap();
        assert_eq!(condition.label(), "gms-on_trail-3_speed-2");
        let condition = build_condition(&config, GmsMode::Off, 0, 4, 5).unwrap();
        assert_eq!(condition.label(), "gms-off_trail-0_speed-4");
    }

    #[test]
    fn subseeds_differ_by_stream_and_seed() {
        assert_eq!(subseed(1, STREAM_SCENE), subseed(1, STREAM_SCENE));
        assert_ne!(subseed(1, STREAM_SCENE), subseed(1, STREAM_NOISE));
        assert_ne!(subseed(1, STREAM_SCENE), subseed(2, STREAM_SCENE));
    }

    #[test]
    fn phase_boundaries_land_on_the_right_output_frames() {
        let reaction = ReactionScript {
            partner_a: 0,
            partner_b: 1,
            t_start: 6.0,
            d_attract: 5.0,
            d_bond: 1.0,
            d_repulse: 5.0,
            target: Vec3::ZERO,
            bond_offset: Vec3::new(0.1, 0.0, 0.0),
            pair_path_id: 2,
        };
        let w = phase_windows(&reaction, 30.0, 600);
        assert_eq!(w.attract_start, 180);
        assert_eq!(w.bond_start, 330);
        assert_eq!(w.repulse_start, 360);
        assert_eq!(w.after_start, 510);
        let late = ReactionScript { t_start: 10.0, ..reaction };
        let w = phase_windows(&late, 30.0, 600);
        assert_eq!(w.repulse_start, 480);
        assert_eq!(w.after_start, 600); // clamped: repulsion runs past the end
    }

    #[test]
    fn invalid_cells_are_rejected() {
        let config = Config::default();
        assert!(build_condition(&config, GmsMode::Off, 5, 1, 0).is_err());
        assert!(build_condition(&config, GmsMode::Off, 0, 0, 0).is_err());
        assert!(build_condition(&config, GmsMode::Off, 0, 5, 0).is_err());
    }

    #[test]
    fn calibration_is_deterministic_and_speed_sensitive() {
        let config = Config::default();
        let a = calibrate(&config, 11, 1, 0.0).unwrap();
        let b = calibrate(&config, 11, 1, 0.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.windows[0], 1);
        let faster = calibrate(&config, 11, 4, 0.0).unwrap();
        assert!(faster.mean_displacement > a.mean_displacement);
        // Faster motion covers the same world-space trail in fewer frames.
        assert!(faster.windows[2] < a.windows[2]);
        assert!((a.d_mol - 0.28).abs() < 1e-12);
    }
}
