//! Deterministic generator for molecular-animation stimuli with
//! illustrative motion smoothing.
//!
//! Context molecules follow nested-value-noise Brownian paths with a
//! configurable geometric smoothing factor; a scripted pair of focus
//! molecules meets, bonds and separates. Frames are rendered headlessly as
//! sphere impostors in two layers, the context layer is motion-blurred
//! with a speed-calibrated echo effect, layers are screen-blended,
//! decimated from 120 to 30 fps, and written out as numbered images with
//! JSON manifests. Everything is a pure function of (config, seed).

pub mod config;
pub mod error;
pub mod geom;
pub mod harness;
pub mod motion;
pub mod noise;
pub mod render;
pub mod scene;
pub mod smoothing;

pub use config::{Config, FrameFormat, CONFIG_SCHEMA_VERSION};
pub use error::{Error, Result};
pub use geom::{SceneBox, Vec3};
pub use harness::{
    batch, build_condition, calibrate, compensate_speed, condition_matrix, estimated_speed,
    generate_stimulus, rgb8_hash, subseed, BatchEntry, BatchManifest, Calibration, GmsMode,
    PhaseWindows, ReactantInfo, SpeedModel, SpeedModelKind, StimulusCondition, StimulusManifest,
    MANIFEST_SCHEMA_VERSION, STREAM_MATRIX, STREAM_NOISE, STREAM_REACTION, STREAM_SCENE,
};
pub use motion::{
    displacement_stats, focus_position, MotionModel, MotionParams, ReactionPhase, ReactionScript,
};
pub use noise::{NoiseField, SmoothingKernel};
pub use render::{
    frame_filename, render_frame, srgb_decode, srgb_encode, Camera, FrameBuffer, RenderLayer,
};
pub use scene::{
    build_scene, Atom, MoleculeInstance, MoleculeType, SceneConfig, ScenePopulation, SET1_PALETTE,
};
pub use smoothing::{
    composite_directories, decimate, echo, echo_run, screen_blend, window_size, EchoParams,
    TrailSpec, DECIMATION_FACTOR,
};
