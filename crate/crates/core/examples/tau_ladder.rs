//! Scratch: print the displacement ladder over tau. Not part of the build.
use stimgen_core::{displacement_stats, MotionParams, NoiseField, SceneBox, Vec3};

fn main() {
    let b = SceneBox::centered(Vec3::new(16.0, 9.0, 4.0));
    for seed in [0u64, 1, 2, 555, 12345] {
        for v in [0.05f64, 0.1, 0.2] {
            let row: Vec<String> = [0.0f64, 0.25, 0.5, 0.75, 1.0]
                .iter()
                .map(|&tau| {
                    let d = displacement_stats(
                        NoiseField::new(seed),
                        &MotionParams::new(v, tau),
                        &b,
                        1000,
                        600,
                        120.0,
                    );
                    format!("{d:.7}")
                })
                .collect();
            println!("seed {seed} v {v}: {}", row.join("  "));
        }
    }
}
