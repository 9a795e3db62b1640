//! Headless software rasterizer: sphere impostors with analytic depth,
//! Lambert shading, layered output for the masking/compositing pipeline,
//! and 8-bit sRGB frame export (PNG or binary PPM).

use crate::error::{Error, Result};
use crate::geom::{SceneBox, Vec3};
use crate::scene::ScenePopulation;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;

/// Which subset of the population a pass draws.
///
/// `FocusOnly` and `ContextWithFocusMask` are the two pipeline layers;
/// `Full` is a single-pass everything render used for diagnostics and the
/// layer-completeness check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderLayer {
    FocusOnly,
    ContextWithFocusMask,
    Full,
}

/// Orthographic camera whose view volume is the scene box, so every
/// in-box position lands inside the viewport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub width: u32,
    pub height: u32,
    pub view: SceneBox,
    /// Linear-light background. Kept black by default: the screen-blend
    /// compositing treats black as the identity, so a brighter background
    /// would double up when layers combine.
    pub background: [f32; 3],
    scale_x: f64,
    scale_y: f64,
}

impl Camera {
    /// Camera filling `width`x`height` with the given view volume. The
    /// viewport aspect must match the box so spheres stay round.
    pub fn fit(width: u32, height: u32, view: SceneBox) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config("viewport must be non-empty".into()));
        }
        let scale_x = width as f64 / view.size.x;
        let scale_y = height as f64 / view.size.y;
        if (scale_x - scale_y).abs() > 1e-9 * scale_x.max(scale_y) {
            return Err(Error::Config(format!(
                "viewport {}x{} does not match view box {}x{} (pixels would be non-square)",
                width, height, view.size.x, view.size.y
            )));
        }
        Ok(Camera { width, height, view, background: [0.0; 3], scale_x, scale_y })
    }

    /// Scene units per pixel along x.
    pub fn units_per_pixel(&self) -> f64 {
        1.0 / self.scale_x
    }

    /// Scene-space coordinates of a pixel center.
    #[inline]
    fn pixel_center(&self, px: u32, py: u32) -> (f64, f64) {
        let x = self.view.min.x + (px as f64 + 0.5) / self.scale_x;
        let y = self.view.max().y - (py as f64 + 0.5) / self.scale_y;
        (x, y)
    }

    /// Pixel-rect (inclusive lo, exclusive hi) covering a scene-space
    /// axis-aligned square around (cx, cy) with half-extent r.
    fn pixel_rect(&self, cx: f64, cy: f64, r: f64) -> Option<(u32, u32, u32, u32)> {
        let x0 = (cx - r - self.view.min.x) * self.scale_x;
        let x1 = (cx + r - self.view.min.x) * self.scale_x;
        let y0 = (self.view.max().y - (cy + r)) * self.scale_y;
        let y1 = (self.view.max().y - (cy - r)) * self.scale_y;
        if x1 < 0.0 || y1 < 0.0 || x0 >= self.width as f64 || y0 >= self.height as f64 {
            return None;
        }
        let px0 = x0.max(0.0) as u32;
        let py0 = y0.max(0.0) as u32;
        let px1 = (x1.ceil() as u32 + 1).min(self.width);
        let py1 = (y1.ceil() as u32 + 1).min(self.height);
        Some((px0, py0, px1, py1))
    }
}

/// Linear-light RGB frame. Values stay in [0, 1]; 8-bit conversion happens
/// only at export so blur averaging works on exact intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl FrameBuffer {
    pub fn new(width: u32, height: u32) -> Self {
        FrameBuffer { width, height, data: vec![0.0; (width * height * 3) as usize] }
    }

    pub fn filled(width: u32, height: u32, color: [f32; 3]) -> Self {
        let mut data = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        FrameBuffer { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn pixel(&self, px: u32, py: u32) -> [f32; 3] {
        let i = ((py * self.width + px) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, px: u32, py: u32, rgb: [f32; 3]) {
        let i = ((py * self.width + px) * 3) as usize;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_shape(&self, other: &FrameBuffer) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// 8-bit sRGB-encoded interleaved RGB.
    pub fn to_srgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| srgb_encode(v as f64)).collect()
    }

    /// Rebuilds linear-light pixels from 8-bit sRGB data.
    pub fn from_srgb8(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != (width * height * 3) as usize {
            return Err(Error::Manifest(format!(
                "pixel data length {} does not match {}x{} RGB",
                bytes.len(),
                width,
                height
            )));
        }
        let data = bytes.iter().map(|&b| srgb_decode(b) as f32).collect();
        Ok(FrameBuffer { width, height, data })
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        write_png_bytes(path, self.width, self.height, &self.to_srgb8())
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::BadImage { path: path.to_owned(), message: e.to_string() })?
            .into_rgb8();
        FrameBuffer::from_srgb8(img.width(), img.height(), img.as_raw())
    }

    /// Reads a binary PPM (P6) with maxval 255.
    pub fn read_ppm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |message: &str| Error::BadImage {
            path: path.to_owned(),
            message: message.to_string(),
        };

        fn next_token(bytes: &[u8], pos: &mut usize) -> Option<(usize, usize)> {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            let start = *pos;
            while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            (start < *pos).then_some((start, *pos))
        }
        fn next_number(bytes: &[u8], pos: &mut usize) -> Option<u32> {
            let (s, e) = next_token(bytes, pos)?;
            std::str::from_utf8(&bytes[s..e]).ok()?.parse().ok()
        }

        let mut pos = 0usize;
        let (s, e) = next_token(&bytes, &mut pos).ok_or_else(|| bad("truncated header"))?;
        if &bytes[s..e] != b"P6" {
            return Err(bad("not a P6 file"));
        }
        let width = next_number(&bytes, &mut pos).ok_or_else(|| bad("bad width"))?;
        let height = next_number(&bytes, &mut pos).ok_or_else(|| bad("bad height"))?;
        let maxval = next_number(&bytes, &mut pos).ok_or_else(|| bad("bad maxval"))?;
        if maxval != 255 {
            return Err(bad("only maxval 255 supported"));
        }
        let payload = pos + 1; // single whitespace byte separates header and data
        let expected = (width * height * 3) as usize;
        if bytes.len() < payload + expected {
            return Err(bad("truncated pixel data"));
        }
        FrameBuffer::from_srgb8(width, height, &bytes[payload..payload + expected])
    }

    /// Binary PPM (P6), 8-bit.
    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        write_ppm_bytes(path, self.width, self.height, &self.to_srgb8())
    }

    #[cfg(test)]
    fn assert_valid(&self) {
        for &v in &self.data {
            assert!(v.is_finite() && (0.0..=1.0).contains(&v), "bad channel value {v}");
        }
    }
}

/// sRGB transfer function, linear [0,1] to 8-bit.
pub fn srgb_encode(linear: f64) -> u8 {
    let l = linear.clamp(0.0, 1.0);
    let c = if l <= 0.003_130_8 { 12.92 * l } else { 1.055 * l.powf(1.0 / 2.4) - 0.055 };
    (c * 255.0).round() as u8
}

/// Inverse sRGB transfer function, 8-bit to linear.
pub fn srgb_decode(value: u8) -> f64 {
    let c = value as f64 / 255.0;
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Output filename for a frame index, e.g. `frame_000017.png`.
pub fn frame_filename(index: u32, extension: &str) -> String {
    format!("frame_{index:06}.{extension}")
}

/// Writes already-encoded 8-bit sRGB pixels as PNG. Compression is tuned
/// for throughput; the pipeline emits thousands of frames per run.
pub fn write_png_bytes(path: &Path, width: u32, height: u32, rgb8: &[u8]) -> Result<()> {
    use image::codecs::png::{CompressionType, FilterType, PngEncoder};
    use image::ImageEncoder;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let writer = std::io::BufWriter::new(file);
    PngEncoder::new_with_quality(writer, CompressionType::Fast, FilterType::Adaptive)
        .write_image(rgb8, width, height, image::ExtendedColorType::Rgb8)
        .map_err(|e| Error::BadImage { path: path.to_owned(), message: e.to_string() })
}

/// Writes already-encoded 8-bit sRGB pixels as binary PPM (P6).
pub fn write_ppm_bytes(path: &Path, width: u32, height: u32, rgb8: &[u8]) -> Result<()> {
    let mut out =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    write!(out, "P6\n{width} {height}\n255\n")
        .and_then(|_| out.write_all(rgb8))
        .map_err(|e| Error::io(path, e))
}

/// Fixed key light, pointing from the surface toward upper-front-left.
const LIGHT_DIR: Vec3 = Vec3 { x: -0.35, y: 0.5, z: -0.8 };
const AMBIENT: f64 = 0.18;

/// Renders one layer of the scene at the given per-molecule positions.
///
/// Each atom is a sphere impostor: a per-pixel circle test with depth from
/// the sphere equation, z-buffered against everything drawn so far. In the
/// context layer the focus pair is drawn as flat black but still writes
/// depth, so context molecules (and later their trails) are correctly
/// hidden behind the reactants.
pub fn render_frame(
    population: &ScenePopulation,
    positions: &[Vec3],
    layer: RenderLayer,
    camera: &Camera,
) -> FrameBuffer {
    assert_eq!(
        positions.len(),
        population.molecules.len(),
        "need one position per molecule"
    );
    let mut frame = FrameBuffer::filled(camera.width, camera.height, camera.background);
    let mut depth = vec![f64::INFINITY; (camera.width * camera.height) as usize];
    let light = LIGHT_DIR.normalized();

    for molecule in &population.molecules {
        let focus = population.is_focus(molecule.id);
        let masked = match layer {
            RenderLayer::FocusOnly => {
                if !focus {
                    continue;
                }
                false
            }
            RenderLayer::ContextWithFocusMask => focus,
            RenderLayer::Full => false,
        };
        let ty = &population.types[molecule.type_id as usize];
        let albedo = [
            srgb_decode(ty.color[0]),
            srgb_decode(ty.color[1]),
            srgb_decode(ty.color[2]),
        ];
        let center = positions[molecule.id as usize];
        for atom in &ty.atoms {
            let c = center + atom.offset;
            let r = atom.radius;
            let Some((px0, py0, px1, py1)) = camera.pixel_rect(c.x, c.y, r) else {
                continue;
            };
            for py in py0..py1 {
                for px in px0..px1 {
                    let (x, y) = camera.pixel_center(px, py);
                    let dx = x - c.x;
                    let dy = y - c.y;
                    let d2 = dx * dx + dy * dy;
                    if d2 > r * r {
                        continue;
                    }
                    let lift = (r * r - d2).sqrt();
                    let z = c.z - lift;
                    let idx = (py * camera.width + px) as usize;
                    if z >= depth[idx] {
                        continue;
                    }
                    depth[idx] = z;
                    let rgb = if masked {
                        [0.0, 0.0, 0.0]
                    } else {
                        let normal = Vec3::new(dx / r, dy / r, -lift / r);
                        let lambert = normal.dot(light).max(0.0);
                        let shade = AMBIENT + (1.0 - AMBIENT) * lambert;
                        [
                            (albedo[0] * shade) as f32,
                            (albedo[1] * shade) as f32,
                            (albedo[2] * shade) as f32,
                        ]
                    };
                    frame.set_pixel(px, py, rgb);
                }
            }
        }
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_scene, Atom, MoleculeInstance, MoleculeType, SceneConfig};
    use tempfile::tempdir;

    fn small_camera(width: u32, height: u32) -> Camera {
        let view = SceneBox::centered(Vec3::new(16.0, 9.0, 4.0));
        Camera::fit(width, height, view).unwrap()
    }

    /// Population with hand-placed single-atom molecule types for oracles.
    fn ball_population(radii: &[f64], focus: (u32, u32)) -> ScenePopulation {
        let types: Vec<MoleculeType> = radii
            .iter()
            .enumerate()
            .map(|(i, &r)| MoleculeType {
                type_id: i as u8,
                color: crate::scene::SET1_PALETTE[i % 8],
                atoms: vec![Atom { offset: Vec3::ZERO, radius: r }],
                bounding_diameter: 2.0 * r,
            })
            .collect();
        let molecules = (0..radii.len() as u32)
            .map(|id| MoleculeInstance { id, type_id: id as u8 })
            .collect();
        let d_mol =
            types.iter().map(|t| t.bounding_diameter).sum::<f64>() / types.len() as f64;
        ScenePopulation {
            molecules,
            types,
            focus_pair: focus,
            bounding_box: SceneBox::centered(Vec3::new(16.0, 9.0, 4.0)),
            d_mol,
        }
    }

    #[test]
    fn camera_rejects_mismatched_aspect() {
        let view = SceneBox::centered(Vec3::new(16.0, 9.0, 4.0));
        assert!(Camera::fit(1024, 576, view).is_ok());
        assert!(Camera::fit(1024, 600, view).is_err());
        assert!(Camera::fit(0, 576, view).is_err());
    }

    #[test]
    fn empty_scene_renders_uniform_background() {
        let pop = ball_population(&[], (0, 0));
        let mut camera = small_camera(64, 36);
        camera.background = [0.25, 0.0, 0.5];
        let frame = render_frame(&pop, &[], RenderLayer::Full, &camera);
        frame.assert_valid();
        for py in 0..36 {
            for px in 0..64 {
                assert_eq!(frame.pixel(px, py), [0.25, 0.0, 0.5]);
            }
        }
    }

    #[test]
    fn lit_pixels_match_the_analytic_disc() {
        let r = 0.5;
        let pop = ball_population(&[r], (9, 9));
        let camera = small_camera(128, 72);
        let frame = render_frame(&pop, &[Vec3::ZERO], RenderLayer::Full, &camera);
        frame.assert_valid();
        let diag = camera.units_per_pixel() * std::f64::consts::SQRT_2;
        for py in 0..72 {
            for px in 0..128 {
                let (x, y) = (
                    -8.0 + (px as f64 + 0.5) / 8.0,
                    4.5 - (py as f64 + 0.5) / 8.0,
                );
                let dist = (x * x + y * y).sqrt();
                let lit = frame.pixel(px, py) != [0.0, 0.0, 0.0];
                if dist <= r - diag {
                    assert!(lit, "pixel ({px},{py}) at {dist} should be inside");
                }
                if dist > r + diag {
                    assert!(!lit, "pixel ({px},{py}) at {dist} should be outside");
                }
            }
        }
    }

    #[test]
    fn nearer_sphere_wins_every_overlap_pixel() {
        // Brute-force all-spheres-per-pixel oracle on a small frame.
        let radii = [0.8, 0.7, 0.9, 0.6, 0.75];
        let pop = ball_population(&radii, (9, 9));
        let positions = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.4, 0.2, -0.5),
            Vec3::new(-0.3, -0.1, 0.4),
            Vec3::new(0.1, -0.3, -0.2),
            Vec3::new(-0.2, 0.3, 0.1),
        ];
        let camera = small_camera(64, 36);
        let frame = render_frame(&pop, &positions, RenderLayer::Full, &camera);
        let light = LIGHT_DIR.normalized();

        for py in 0..36 {
            for px in 0..64 {
                let (x, y) = camera.pixel_center(px, py);
                let mut best: Option<(f64, usize, f64, f64)> = None;
                for (i, p) in positions.iter().enumerate() {
                    let r = radii[i];
                    let d2 = (x - p.x).powi(2) + (y - p.y).powi(2);
                    if d2 > r * r {
                        continue;
                    }
                    let z = p.z - (r * r - d2).sqrt();
                    if best.map_or(true, |(bz, ..)| z < bz) {
                        best = Some((z, i, x - p.x, y - p.y));
                    }
                }
                let expected = match best {
                    None => [0.0, 0.0, 0.0],
                    Some((_, i, dx, dy)) => {
                        let r = radii[i];
                        let lift = (r * r - dx * dx - dy * dy).sqrt();
                        let normal = Vec3::new(dx / r, dy / r, -lift / r);
                        let shade = AMBIENT + (1.0 - AMBIENT) * normal.dot(light).max(0.0);
                        let color = pop.types[i].color;
                        [
                            (srgb_decode(color[0]) * shade) as f32,
                            (srgb_decode(color[1]) * shade) as f32,
                            (srgb_decode(color[2]) * shade) as f32,
                        ]
                    }
                };
                assert_eq!(frame.pixel(px, py), expected, "pixel ({px},{py})");
            }
        }
    }

    #[test]
    fn masked_focus_pixels_are_exactly_black() {
        let pop = ball_population(&[0.8, 0.8], (0, 1));
        let positions = [Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let camera = small_camera(128, 72);
        let masked = render_frame(&pop, &positions, RenderLayer::ContextWithFocusMask, &camera);
        let full = render_frame(&pop, &positions, RenderLayer::Full, &camera);
        let mut covered = 0;
        for py in 0..72 {
            for px in 0..128 {
                if full.pixel(px, py) != [0.0, 0.0, 0.0] {
                    covered += 1;
                    assert_eq!(masked.pixel(px, py), [0.0, 0.0, 0.0]);
                }
            }
        }
        assert!(covered > 100, "oracle should cover real pixels, got {covered}");
    }

    #[test]
    fn focus_layer_draws_only_the_pair() {
        // Oversized molecules so every atom covers many pixels at 256x144.
        let config = SceneConfig {
            n_molecules: 40,
            molecule_diameter: 1.5,
            ..SceneConfig::default()
        };
        let pop = build_scene(&config, 11).unwrap();
        let camera = small_camera(256, 144);
        // Park every non-focus molecule at the box ceiling, the pair at center.
        let positions: Vec<Vec3> = (0..40)
            .map(|id| {
                if pop.is_focus(id) {
                    Vec3::new(if id == pop.focus_pair.0 { -2.0 } else { 2.0 }, 0.0, 0.0)
                } else {
                    Vec3::new(-7.0, 4.0, 0.0)
                }
            })
            .collect();
        let frame = render_frame(&pop, &positions, RenderLayer::FocusOnly, &camera);
        frame.assert_valid();
        // The parked cluster's corner must stay background in the focus layer.
        let full = render_frame(&pop, &positions, RenderLayer::Full, &camera);
        let mut context_pixels = 0;
        let mut focus_pixels = 0;
        for py in 0..144 {
            for px in 0..256 {
                let in_full = full.pixel(px, py) != [0.0, 0.0, 0.0];
                let in_focus = frame.pixel(px, py) != [0.0, 0.0, 0.0];
                if in_focus {
                    focus_pixels += 1;
                    assert!(in_full);
                }
                if in_full && py < 40 && px < 80 {
                    context_pixels += 1;
                    assert!(!in_focus, "context molecule leaked into focus layer");
                }
            }
        }
        assert!(focus_pixels > 20);
        assert!(context_pixels > 20);
    }

    #[test]
    fn rendering_is_deterministic() {
        let pop = build_scene(&SceneConfig { n_molecules: 64, ..Default::default() }, 5).unwrap();
        let positions: Vec<Vec3> = (0..64)
            .map(|i| Vec3::new((i % 16) as f64 - 7.5, (i / 16) as f64 - 1.5, 0.0))
            .collect();
        let camera = small_camera(256, 144);
        let a = render_frame(&pop, &positions, RenderLayer::Full, &camera);
        let b = render_frame(&pop, &positions, RenderLayer::Full, &camera);
        assert_eq!(a, b);
    }

    #[test]
    fn srgb_transfer_roundtrips_all_byte_values() {
        for v in 0..=255u8 {
            assert_eq!(srgb_encode(srgb_decode(v)), v);
        }
        assert_eq!(srgb_encode(0.0), 0);
        assert_eq!(srgb_encode(1.0), 255);
        assert_eq!(srgb_encode(-0.5), 0);
        assert_eq!(srgb_encode(2.0), 255);
    }

    #[test]
    fn png_roundtrip_preserves_exported_bytes() {
        let pop = ball_population(&[0.9], (9, 9));
        let camera = small_camera(64, 36);
        let frame = render_frame(&pop, &[Vec3::ZERO], RenderLayer::Full, &camera);
        let dir = tempdir().unwrap();
        let path = dir.path().join(frame_filename(17, "png"));
        assert_eq!(path.file_name().unwrap().to_str().unwrap(), "frame_000017.png");
        frame.write_png(&path).unwrap();
        let back = FrameBuffer::read_png(&path).unwrap();
        assert_eq!(back.to_srgb8(), frame.to_srgb8());
    }

    #[test]
    fn ppm_header_and_payload_are_wellformed() {
        let frame = FrameBuffer::filled(4, 2, [1.0, 0.0, 0.5]);
        let dir = tempdir().unwrap();
        let path = dir.path().join(frame_filename(0, "ppm"));
        frame.write_ppm(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P6\n4 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 4 * 2 * 3);
        assert_eq!(&bytes[header.len()..header.len() + 3], &[255, 0, srgb_encode(0.5)]);
        let back = FrameBuffer::read_ppm(&path).unwrap();
        assert_eq!(back.to_srgb8(), frame.to_srgb8());
        assert!(FrameBuffer::read_ppm(&path.with_extension("missing")).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = FrameBuffer::new(4, 2);
        let b = FrameBuffer::new(4, 3);
        assert!(matches!(
            a.same_shape(&b),
            Err(Error::DimensionMismatch(4, 2, 4, 3))
        ));
    }
}
