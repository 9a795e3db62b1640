use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use stimgen_core::{
    batch, build_condition, calibrate, compensate_speed, composite_directories, estimated_speed,
    generate_stimulus, Config, EchoParams, GmsMode, SpeedModel, SpeedModelKind,
};

#[derive(Parser)]
#[command(name = "stimgen", version, about = "Deterministic molecular-animation stimulus generator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the full study batch, or a single condition.
    Generate {
        /// JSON config file; omit to use built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed; overrides the config's harness.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config's harness.out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Single design cell as GMS,TRAIL,SPEED (e.g. `on,3,2`) instead of
        /// the whole batch.
        #[arg(long)]
        condition: Option<String>,
        /// Calibrate and write the index manifest without rendering frames.
        #[arg(long)]
        dry_run: bool,
        /// Worker threads; omit to use all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the blur calibration for one speed level and smoothing factor.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Speed level 1..=4.
        #[arg(long)]
        speed_level: u8,
        /// Geometric smoothing factor in [0, 1].
        #[arg(long)]
        tau: f64,
        /// Stimulus seed; overrides the config's harness.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate the speed-perception regressions for a ground-truth speed.
    Compensate {
        /// Ground-truth speed percentage in [0, 100].
        #[arg(long)]
        speed: f64,
        #[arg(long, value_enum, default_value_t = ModelArg::Baseline)]
        model: ModelArg,
    },
    /// Blur a context frame directory and screen-blend it with a focus
    /// frame directory.
    Composite {
        /// Directory of context-layer frames (frame_NNNNNN.png/.ppm).
        #[arg(long)]
        context: PathBuf,
        /// Directory of focus-layer frames with matching numbering.
        #[arg(long)]
        focus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Echo window size in frames (odd).
        #[arg(long)]
        window: u32,
        /// Keep only every 4th composited frame, renumbered densely.
        #[arg(long)]
        decimate: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Baseline,
    Gms,
    Vms2,
}

impl ModelArg {
    fn kind(self) -> SpeedModelKind {
        match self {
            ModelArg::Baseline => SpeedModelKind::Baseline,
            ModelArg::Gms => SpeedModelKind::Gms,
            ModelArg::Vms2 => SpeedModelKind::VmsTrail2,
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<Config> {
    match path {
        Some(p) => {
            Config::load(p).with_context(|| format!("loading config {}", p.display()))
        }
        None => Ok(Config::default()),
    }
}

fn parse_condition(spec: &str) -> Result<(GmsMode, u32, u8)> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("condition must be GMS,TRAIL,SPEED (e.g. on,3,2), got `{spec}`");
    }
    let gms = match parts[0] {
        "on" => GmsMode::On,
        "off" => GmsMode::Off,
        other => bail!("GMS must be `on` or `off`, got `{other}`"),
    };
    let trail: u32 = parts[1].parse().with_context(|| format!("bad trail `{}`", parts[1]))?;
    let speed: u8 = parts[2].parse().with_context(|| format!("bad speed level `{}`", parts[2]))?;
    Ok((gms, trail, speed))
}

fn run_generate(
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    condition: Option<String>,
    dry_run: bool,
    threads: Option<usize>,
) -> Result<()> {
    let config = load_config(config.as_ref())?;
    let seed = seed.unwrap_or(config.harness.seed);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    let out = out
        .or_else(|| config.harness.out_dir.clone())
        .ok_or_else(|| anyhow!("no output directory: pass --out or set harness.out_dir"))?;

    match condition {
        Some(spec) => {
            let (gms, trail, level) = parse_condition(&spec)?;
            let condition = build_condition(&config, gms, trail, level, seed)?;
            if dry_run {
                let cal = calibrate(&config, condition.seed, level, condition.gms.tau())?;
                println!(
                    "{} d_bar={:.9} n_window={}",
                    condition.label(),
                    cal.mean_displacement,
                    cal.windows[trail as usize]
                );
            } else {
                let manifest = generate_stimulus(&config, &condition, &out)?;
                println!(
                    "{} frames={} n_window={} out={}",
                    condition.label(),
                    manifest.frame_count,
                    manifest.n_window,
                    out.display()
                );
            }
        }
        None => {
            let manifest = batch(&config, seed, &out, dry_run)?;
            for entry in &manifest.stimuli {
                println!(
                    "{} seed={} n_window={}{}",
                    entry.directory,
                    entry.condition.seed,
                    entry.n_window,
                    if dry_run { " (dry run)" } else { "" }
                );
            }
            println!("index: {}", out.join("batch.json").display());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate { config, seed, out, condition, dry_run, threads } => {
            run_generate(config, seed, out, condition, dry_run, threads)
        }
        Command::Calibrate { config, speed_level, tau, seed } => {
            let config = load_config(config.as_ref())?;
            let seed = seed.unwrap_or(config.harness.seed);
            let cal = calibrate(&config, seed, speed_level, tau)?;
            println!("d_bar = {:.9}", cal.mean_displacement);
            println!("d_mol = {:.9}", cal.d_mol);
            for (trail, n) in cal.windows.iter().enumerate() {
                println!("trail {trail}: n_window = {n}");
            }
            Ok(())
        }
        Command::Compensate { speed, model } => {
            let es = estimated_speed(speed, &SpeedModel::of(model.kind()))?;
            println!("es = {es}");
            println!("cs = {}", compensate_speed(speed));
            Ok(())
        }
        Command::Composite { context, focus, out, window, decimate } => {
            let written = composite_directories(
                &context,
                &focus,
                &out,
                &EchoParams { n_window: window },
                decimate,
            )?;
            println!("wrote {written} frames to {}", out.display());
            Ok(())
        }
    }
}
