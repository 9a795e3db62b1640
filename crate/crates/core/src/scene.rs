//! Molecule population: color-coded types built from small rigid sphere
//! clusters, plus the seeded focus-pair selection.

use crate::error::{Error, Result};
use crate::geom::{SceneBox, Vec3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// 8-class Set1 palette (ColorBrewer), sRGB 8-bit.
pub const SET1_PALETTE: [[u8; 3]; 8] = [
    [0xE4, 0x1A, 0x1C],
    [0x37, 0x7E, 0xB8],
    [0x4D, 0xAF, 0x4A],
    [0x98, 0x4E, 0xA3],
    [0xFF, 0x7F, 0x00],
    [0xFF, 0xFF, 0x33],
    [0xA6, 0x56, 0x28],
    [0xF7, 0x81, 0xBF],
];

/// Bounding-sphere diameter of each type relative to the configured base
/// diameter. Mean is exactly 1, spread stays within +-15%.
const DIAMETER_FACTORS: [f64; 8] = [1.0, 1.05, 0.95, 1.1, 0.9, 1.0, 1.05, 0.95];

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// One sphere of a molecule's rigid cluster, in scene units relative to the
/// molecule center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub offset: Vec3,
    pub radius: f64,
}

/// A molecule species: color plus rigid atom layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeType {
    pub type_id: u8,
    /// sRGB 8-bit display color.
    pub color: [u8; 3],
    pub atoms: Vec<Atom>,
    /// Diameter of the cluster's bounding sphere, scene units.
    pub bounding_diameter: f64,
}

/// One placed molecule. `id` doubles as the trajectory index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoleculeInstance {
    pub id: u32,
    pub type_id: u8,
}

/// Scene-construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub n_molecules: u32,
    pub n_types: u32,
    /// Scene box extents (width, height, depth), centered on the origin.
    pub box_size: [f64; 3],
    /// Base molecule bounding-sphere diameter, scene units.
    pub molecule_diameter: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            n_molecules: 1000,
            n_types: 8,
            box_size: [16.0, 9.0, 4.0],
            molecule_diameter: 0.28,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_molecules < 2 {
            return Err(Error::Config(format!(
                "need at least 2 molecules for a reacting pair, got {}",
                self.n_molecules
            )));
        }
        if !(2..=8).contains(&self.n_types) {
            return Err(Error::Config(format!(
                "n_types must be in [2, 8], got {}",
                self.n_types
            )));
        }
        if self.box_size.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(Error::Config(format!("box extents must be positive: {:?}", self.box_size)));
        }
        if !(self.molecule_diameter.is_finite() && self.molecule_diameter > 0.0) {
            return Err(Error::Config(format!(
                "molecule_diameter must be positive, got {}",
                self.molecule_diameter
            )));
        }
        Ok(())
    }

    pub fn scene_box(&self) -> SceneBox {
        SceneBox::centered(Vec3::new(self.box_size[0], self.box_size[1], self.box_size[2]))
    }
}

/// The built scene: immutable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePopulation {
    pub molecules: Vec<MoleculeInstance>,
    pub types: Vec<MoleculeType>,
    pub focus_pair: (u32, u32),
    pub bounding_box: SceneBox,
    /// Mean bounding-sphere diameter across types; the world-space unit for
    /// trail lengths.
    pub d_mol: f64,
}

impl ScenePopulation {
    pub fn molecule_type(&self, id: u32) -> &MoleculeType {
        &self.types[self.molecules[id as usize].type_id as usize]
    }

    pub fn is_focus(&self, id: u32) -> bool {
        id == self.focus_pair.0 || id == self.focus_pair.1
    }
}

/// Raw atom layouts, one per type, before size normalization. Shapes are
/// loose nods to small molecules: monatomic, diatomic, bent triatomic,
/// tetrahedral, planar cross, octahedral, ring-with-center, cubic.
fn raw_layout(type_id: u8) -> Vec<(Vec3, f64)> {
    let v = Vec3::new;
    match type_id {
        0 => vec![(Vec3::ZERO, 1.0)],
        1 => vec![(v(-0.5, 0.0, 0.0), 0.6), (v(0.5, 0.0, 0.0), 0.6)],
        2 => vec![
            (v(0.0, 0.2, 0.0), 0.55),
            (v(-0.55, -0.25, 0.0), 0.4),
            (v(0.55, -0.25, 0.0), 0.4),
        ],
        3 => vec![
            (v(0.35, 0.35, 0.35), 0.45),
            (v(0.35, -0.35, -0.35), 0.45),
            (v(-0.35, 0.35, -0.35), 0.45),
            (v(-0.35, -0.35, 0.35), 0.45),
        ],
        4 => vec![
            (Vec3::ZERO, 0.5),
            (v(0.6, 0.0, 0.0), 0.35),
            (v(-0.6, 0.0, 0.0), 0.35),
            (v(0.0, 0.6, 0.0), 0.35),
            (v(0.0, -0.6, 0.0), 0.35),
        ],
        5 => vec![
            (v(0.6, 0.0, 0.0), 0.38),
            (v(-0.6, 0.0, 0.0), 0.38),
            (v(0.0, 0.6, 0.0), 0.38),
            (v(0.0, -0.6, 0.0), 0.38),
            (v(0.0, 0.0, 0.6), 0.38),
            (v(0.0, 0.0, -0.6), 0.38),
        ],
        6 => {
            let mut atoms = vec![(Vec3::ZERO, 0.42)];
            let ring = [
                (1.0, 0.0),
                (0.5, SQRT3_2),
                (-0.5, SQRT3_2),
                (-1.0, 0.0),
                (-0.5, -SQRT3_2),
                (0.5, -SQRT3_2),
            ];
            for (x, y) in ring {
                atoms.push((v(0.65 * x, 0.65 * y, 0.0), 0.33));
            }
            atoms
        }
        7 => {
            let mut atoms = Vec::with_capacity(8);
            for &sx in &[-0.45, 0.45] {
                for &sy in &[-0.45, 0.45] {
                    for &sz in &[-0.45, 0.45] {
                        atoms.push((v(sx, sy, sz), 0.35));
                    }
                }
            }
            atoms
        }
        _ => unreachable!("type_id out of range"),
    }
}

/// Built-in shape library scaled so type `t` has bounding diameter
/// `DIAMETER_FACTORS[t] * base_diameter`.
pub fn shape_library(base_diameter: f64, n_types: u32) -> Vec<MoleculeType> {
    (0..n_types as u8)
        .map(|t| {
            let raw = raw_layout(t);
            let extent = raw
                .iter()
                .map(|(off, r)| off.length() + r)
                .fold(0.0f64, f64::max);
            let diameter = DIAMETER_FACTORS[t as usize] * base_diameter;
            // Normalize the raw cluster to bounding radius diameter/2.
            let k = diameter * 0.5 / extent;
            let atoms = raw
                .into_iter()
                .map(|(off, r)| Atom { offset: off * k, radius: r * k })
                .collect();
            MoleculeType {
                type_id: t,
                color: SET1_PALETTE[t as usize],
                atoms,
                bounding_diameter: diameter,
            }
        })
        .collect()
}

/// Deterministically builds the molecule population for one stimulus.
///
/// Types are dealt round-robin (so the histogram is within one of uniform)
/// and the assignment order is then shuffled. The focus pair picks two
/// distinct types first, then one instance of each.
pub fn build_scene(config: &SceneConfig, seed: u64) -> Result<ScenePopulation> {
    config.validate()?;
    let types = shape_library(config.molecule_diameter, config.n_types);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut assignment: Vec<u8> =
        (0..config.n_molecules).map(|i| (i % config.n_types) as u8).collect();
    assignment.shuffle(&mut rng);
    let molecules: Vec<MoleculeInstance> = assignment
        .iter()
        .enumerate()
        .map(|(i, &t)| MoleculeInstance { id: i as u32, type_id: t })
        .collect();

    let type_a = rng.gen_range(0..config.n_types) as u8;
    let skew = rng.gen_range(0..config.n_types - 1) as u8;
    let type_b = if skew >= type_a { skew + 1 } else { skew };

    let pick = |rng: &mut ChaCha8Rng, wanted: u8| -> u32 {
        let members: Vec<u32> =
            molecules.iter().filter(|m| m.type_id == wanted).map(|m| m.id).collect();
        members[rng.gen_range(0..members.len())]
    };
    let focus_a = pick(&mut rng, type_a);
    let focus_b = pick(&mut rng, type_b);

    let d_mol =
        types.iter().map(|t| t.bounding_diameter).sum::<f64>() / types.len() as f64;

    Ok(ScenePopulation {
        molecules,
        types,
        focus_pair: (focus_a, focus_b),
        bounding_box: config.scene_box(),
        d_mol,
    })
}
