//! Shared fixtures for the criterion benches: a scaled-down scene (same box
//! proportions and palette as the defaults, fewer molecules and pixels) so
//! individual pipeline stages can be timed in isolation.

use stimgen_core::{
    build_scene, Camera, Config, MotionModel, MotionParams, NoiseField, ScenePopulation,
    SmoothingKernel, Vec3,
};

pub fn bench_config() -> Config {
    let mut config = Config::default();
    config.scene.n_molecules = 120;
    config.render.width = 256;
    config.render.height = 144;
    config
}

pub fn bench_population() -> ScenePopulation {
    build_scene(&bench_config().scene, 7).expect("bench scene")
}

pub fn bench_camera() -> Camera {
    bench_config().camera().expect("bench camera")
}

pub fn bench_model(tau: f64) -> MotionModel {
    let noise = NoiseField::with_kernel(11, SmoothingKernel::Quintic);
    MotionModel::new(noise, MotionParams::new(0.10, tau))
}

pub fn positions(population: &ScenePopulation, model: &MotionModel, t: f64) -> Vec<Vec3> {
    population
        .molecules
        .iter()
        .map(|m| model.context_position(m.id, t, &population.bounding_box))
        .collect()
}
