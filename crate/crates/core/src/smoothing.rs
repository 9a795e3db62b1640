//! Visual motion smoothing: speed-calibrated echo motion blur, screen-blend
//! compositing, and 120 -> 30 fps decimation.
//!
//! The echo effect replaces each frame with the unweighted mean of the
//! `n_window` frames centered on it (edges padded by replicating the first
//! and last frame), so trails have constant intensity instead of the fading
//! streaks an accumulation buffer would give.

use crate::error::{Error, Result};
use crate::render::FrameBuffer;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Requested trail length in multiples of the molecule bounding diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrailSpec {
    pub trail_length: u32,
}

impl TrailSpec {
    pub fn new(trail_length: u32) -> Result<Self> {
        let spec = TrailSpec { trail_length };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trail_length > 4 {
            return Err(Error::Config(format!(
                "trail_length must be in [0, 4], got {}",
                self.trail_length
            )));
        }
        Ok(())
    }
}

/// Size of the centered echo window, in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EchoParams {
    pub n_window: u32,
}

impl EchoParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_window == 0 || self.n_window % 2 == 0 {
            return Err(Error::Config(format!(
                "n_window must be odd and positive, got {}",
                self.n_window
            )));
        }
        Ok(())
    }
}

/// Number of echo frames needed for a trail of `trail_length * d_mol` world
/// units when molecules move `mean_displacement` units per frame: the
/// nearest odd integer >= 1 to their ratio. Trail length 0 means no blur.
pub fn window_size(trail: TrailSpec, d_mol: f64, mean_displacement: f64) -> Result<EchoParams> {
    trail.validate()?;
    if trail.trail_length == 0 {
        return Ok(EchoParams { n_window: 1 });
    }
    if !(mean_displacement.is_finite() && mean_displacement > 0.0) {
        return Err(Error::Calibration(format!(
            "mean per-frame displacement must be positive, got {mean_displacement}"
        )));
    }
    if !(d_mol.is_finite() && d_mol > 0.0) {
        return Err(Error::Calibration(format!("d_mol must be positive, got {d_mol}")));
    }
    let frames = trail.trail_length as f64 * d_mol / mean_displacement;
    let n = 2.0 * ((frames - 1.0) * 0.5).round() + 1.0;
    Ok(EchoParams { n_window: n.max(1.0) as u32 })
}

/// Streams the echo effect over a frame sequence.
///
/// The window slides forward by adding the incoming frame and subtracting
/// the outgoing one from a per-pixel f64 running sum, so only two input
/// frames are resident at a time — both sides of the window are re-pulled
/// from their sources instead of being buffered. `add_source(i)` and
/// `sub_source(i)` are each called at most once per index, in increasing
/// order, and must return bit-identical frames for the same index (true
/// for deterministic renderers and for files). `sink(t, frame)` receives
/// every averaged output frame in order. The result matches materializing
/// the whole sequence and averaging each window directly; the incremental
/// f64 sums stay within one f32 ULP of that reference over any realistic
/// sequence length.
pub fn echo_run<SA, SB, K>(
    len: usize,
    params: &EchoParams,
    mut add_source: SA,
    mut sub_source: SB,
    mut sink: K,
) -> Result<()>
where
    SA: FnMut(usize) -> Result<FrameBuffer>,
    SB: FnMut(usize) -> Result<FrameBuffer>,
    K: FnMut(usize, &FrameBuffer) -> Result<()>,
{
    params.validate()?;
    if len == 0 {
        return Err(Error::EmptySequence);
    }
    let n = params.n_window as usize;
    let h = n / 2;
    let clamp = |k: isize| -> usize { k.clamp(0, len as isize - 1) as usize };

    let mut add_frame = add_source(0)?;
    let mut add_idx = 0usize;
    let (width, height) = (add_frame.width(), add_frame.height());
    let check = |f: &FrameBuffer| -> Result<()> {
        if f.width() != width || f.height() != height {
            return Err(Error::DimensionMismatch(width, height, f.width(), f.height()));
        }
        Ok(())
    };
    let mut acc = vec![0.0f64; add_frame.data().len()];

    // Initial window for output 0: padded indices -h..=h, clamped. Clamping
    // repeats edge indices consecutively, so one resident frame suffices.
    for k in 0..n {
        let idx = clamp(k as isize - h as isize);
        if idx > add_idx {
            debug_assert_eq!(idx, add_idx + 1);
            add_frame = add_source(idx)?;
            check(&add_frame)?;
            add_idx = idx;
        }
        for (a, &v) in acc.iter_mut().zip(add_frame.data()) {
            *a += v as f64;
        }
    }

    let mut sub_frame: Option<FrameBuffer> = None;
    let mut sub_idx = usize::MAX;
    let inv = 1.0 / n as f64;
    let mut out = FrameBuffer::new(width, height);
    for t in 0..len {
        for (o, &a) in out.data_mut().iter_mut().zip(acc.iter()) {
            *o = (a * inv) as f32;
        }
        sink(t, &out)?;
        if t + 1 == len {
            break;
        }
        let incoming = clamp((t + n) as isize - h as isize);
        if incoming > add_idx {
            debug_assert_eq!(incoming, add_idx + 1);
            add_frame = add_source(incoming)?;
            check(&add_frame)?;
            add_idx = incoming;
        }
        for (a, &v) in acc.iter_mut().zip(add_frame.data()) {
            *a += v as f64;
        }
        let outgoing = clamp(t as isize - h as isize);
        if sub_idx != outgoing {
            let f = sub_source(outgoing)?;
            check(&f)?;
            sub_frame = Some(f);
            sub_idx = outgoing;
        }
        let sub = sub_frame.as_ref().expect("outgoing frame resident");
        for (a, &v) in acc.iter_mut().zip(sub.data()) {
            *a -= v as f64;
        }
    }
    Ok(())
}

/// In-memory echo over a whole sequence.
pub fn echo(frames: &[FrameBuffer], params: &EchoParams) -> Result<Vec<FrameBuffer>> {
    let mut out = Vec::with_capacity(frames.len());
    echo_run(
        frames.len(),
        params,
        |i| Ok(frames[i].clone()),
        |i| Ok(frames[i].clone()),
        |_, f| {
            out.push(f.clone());
            Ok(())
        },
    )?;
    Ok(out)
}

/// Screen blend: per channel `1 - (1 - a)(1 - b)`. Black is the identity,
/// which is what makes black-masked layers composable.
pub fn screen_blend(a: &FrameBuffer, b: &FrameBuffer) -> Result<FrameBuffer> {
    a.same_shape(b)?;
    let mut out = FrameBuffer::new(a.width(), a.height());
    for ((o, &x), &y) in out.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        *o = (1.0 - (1.0 - x as f64) * (1.0 - y as f64)) as f32;
    }
    Ok(out)
}

/// 120 fps -> 30 fps: keep every `DECIMATION_FACTOR`-th frame from frame 0.
pub const DECIMATION_FACTOR: usize = 4;

pub fn decimate(frames: &[FrameBuffer]) -> Vec<FrameBuffer> {
    frames.iter().step_by(DECIMATION_FACTOR).cloned().collect()
}

/// A numbered frame file (`frame_NNNNNN.png` or `.ppm`) found on disk.
#[derive(Debug, Clone)]
struct FrameFile {
    index: u32,
    path: PathBuf,
    png: bool,
}

impl FrameFile {
    fn read(&self) -> Result<FrameBuffer> {
        if self.png {
            FrameBuffer::read_png(&self.path)
        } else {
            FrameBuffer::read_ppm(&self.path)
        }
    }
}

fn list_frames(dir: &Path) -> Result<Vec<FrameFile>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_prefix("frame_") else { continue };
        let (digits, png) = match stem.strip_suffix(".png") {
            Some(d) => (d, true),
            None => match stem.strip_suffix(".ppm") {
                Some(d) => (d, false),
                None => continue,
            },
        };
        if let Ok(index) = digits.parse::<u32>() {
            frames.push(FrameFile { index, path, png });
        }
    }
    frames.sort_by_key(|f| f.index);
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(frames)
}

/// Offline compositor: blurs the context layer found in `context_dir`,
/// screen-blends it with the matching frames in `focus_dir`, and writes the
/// result to `out_dir` (same image format as the context input). With
/// `decimate_output`, only every 4th frame is written, renumbered densely.
pub fn composite_directories(
    context_dir: &Path,
    focus_dir: &Path,
    out_dir: &Path,
    params: &EchoParams,
    decimate_output: bool,
) -> Result<usize> {
    let context = list_frames(context_dir)?;
    let focus = list_frames(focus_dir)?;
    if context.len() != focus.len() {
        return Err(Error::Manifest(format!(
            "layer frame counts differ: {} context vs {} focus",
            context.len(),
            focus.len()
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut written = 0usize;
    echo_run(
        context.len(),
        params,
        |i| context[i].read(),
        |i| context[i].read(),
        |t, blurred| {
            if decimate_output && t % DECIMATION_FACTOR != 0 {
                return Ok(());
            }
            let composed = screen_blend(blurred, &focus[t].read()?)?;
            let out_index = if decimate_output { t / DECIMATION_FACTOR } else { t };
            let ext = if context[t].png { "png" } else { "ppm" };
            let path = out_dir.join(crate::render::frame_filename(out_index as u32, ext));
            if context[t].png {
                composed.write_png(&path)?;
            } else {
                composed.write_ppm(&path)?;
            }
            written += 1;
            Ok(())
        },
    )?;
    Ok(written)
}
