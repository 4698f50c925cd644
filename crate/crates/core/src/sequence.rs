//! Seeded procedural object sequences.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::object::{rasterize_shape, ObjectModel};
use crate::shape::ShapeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeFamily {
    Box,
    Cylinder,
    Ellipsoid,
    Frustum,
    Cup,
    LBlock,
}

/// Sampling weight and size ranges (centimeters) for one shape family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub family: ShapeFamily,
    pub weight: f64,
    /// Footprint extent range (side length or diameter).
    pub xy_cm: [f64; 2],
    /// Height range.
    pub z_cm: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub families: Vec<FamilyConfig>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let f = |family, weight, xy_cm, z_cm| FamilyConfig {
            family,
            weight,
            xy_cm,
            z_cm,
        };
        Self {
            families: vec![
                f(ShapeFamily::Box, 3.0, [4.0, 14.0], [3.0, 12.0]),
                f(ShapeFamily::Cylinder, 2.0, [4.0, 10.0], [4.0, 16.0]),
                f(ShapeFamily::Ellipsoid, 1.0, [4.0, 10.0], [4.0, 10.0]),
                f(ShapeFamily::Frustum, 1.0, [4.0, 10.0], [5.0, 15.0]),
                f(ShapeFamily::Cup, 1.0, [6.0, 12.0], [4.0, 10.0]),
                f(ShapeFamily::LBlock, 1.0, [6.0, 14.0], [3.0, 10.0]),
            ],
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::InvalidConfig("generator needs at least one shape family".into()));
        }
        let mut total = 0.0;
        for f in &self.families {
            if !(f.weight >= 0.0 && f.weight.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{:?}: weight must be non-negative",
                    f.family
                )));
            }
            total += f.weight;
            for (label, [lo, hi]) in [("xy_cm", f.xy_cm), ("z_cm", f.z_cm)] {
                if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "{:?}: bad {label} range [{lo}, {hi}]",
                        f.family
                    )));
                }
            }
            let max_xy = grid.cells_x.min(grid.cells_y) as f64 * grid.res_xy * 100.0;
            let max_z = grid.cells_z as f64 * grid.res_z * 100.0;
            if f.xy_cm[1] > max_xy || f.z_cm[1] > max_z {
                return Err(Error::InvalidConfig(format!(
                    "{:?}: size range exceeds the container ({max_xy} cm x {max_z} cm)",
                    f.family
                )));
            }
        }
        if total <= 0.0 {
            return Err(Error::InvalidConfig("total shape weight must be positive".into()));
        }
        Ok(())
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> &FamilyConfig {
        let total: f64 = self.families.iter().map(|f| f.weight).sum();
        let mut t = rng.random_range(0.0..total);
        for f in &self.families {
            if t < f.weight {
                return f;
            }
            t -= f.weight;
        }
        self.families
            .iter()
            .rev()
            .find(|f| f.weight > 0.0)
            .expect("positive weight")
    }
}

fn sample_shape(cfg: &FamilyConfig, rng: &mut ChaCha8Rng) -> ShapeSpec {
    let cm = |v: f64| v / 100.0;
    let mut xy = || cm(rng.random_range(cfg.xy_cm[0]..=cfg.xy_cm[1]));
    let (a, b) = (xy(), xy());
    let z = cm(rng.random_range(cfg.z_cm[0]..=cfg.z_cm[1]));
    let t: f64 = rng.random_range(0.0..1.0);
    match cfg.family {
        ShapeFamily::Box => ShapeSpec::Box { x: a, y: b, z },
        ShapeFamily::Cylinder => ShapeSpec::Cylinder {
            radius: a / 2.0,
            height: z,
        },
        ShapeFamily::Ellipsoid => ShapeSpec::Ellipsoid {
            rx: a / 2.0,
            ry: b / 2.0,
            rz: z / 2.0,
        },
        ShapeFamily::Frustum => {
            let top = (a * (0.5 + 0.9 * t)).min(cm(cfg.xy_cm[1]));
            ShapeSpec::Frustum {
                bottom_radius: a / 2.0,
                top_radius: top / 2.0,
                height: z,
            }
        }
        ShapeFamily::Cup => ShapeSpec::Cup {
            radius: a / 2.0,
            height: z,
            wall: (0.15 * a).max(0.01),
            base: (0.15 * z).max(0.005),
        },
        ShapeFamily::LBlock => ShapeSpec::LBlock {
            x: a,
            y: b,
            z,
            notch_x: a * (0.3 + 0.4 * t),
            notch_y: b * (0.7 - 0.4 * t),
        },
    }
}

/// An ordered list of objects together with the seed that regenerates it.
#[derive(Debug, Clone)]
pub struct ObjectSequence {
    pub seed: u64,
    pub objects: Vec<Arc<ObjectModel>>,
}

impl ObjectSequence {
    pub fn new(seed: u64, objects: Vec<Arc<ObjectModel>>) -> Self {
        Self { seed, objects }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

const MAX_ATTEMPTS: usize = 1000;

/// Draws `count` procedural objects. Shapes whose rasterized volume varies by more than the
/// resampling tolerance across orientations are redrawn.
pub fn generate_sequence(seed: u64, count: usize, cfg: &GeneratorConfig, grid: &GridSpec) -> Result<ObjectSequence> {
    if count == 0 {
        return Err(Error::InvalidConfig("sequence length must be at least 1".into()));
    }
    cfg.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::with_capacity(count);
    for index in 0..count {
        let mut attempts = 0;
        let model = loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(Error::InvalidConfig(
                    "generator could not produce a valid shape; check size ranges".into(),
                ));
            }
            let family = cfg.pick(&mut rng);
            let shape = sample_shape(family, &mut rng);
            let name = format!("{}-{index:03}", shape.family());
            match rasterize_shape(name, &shape, grid) {
                Ok(m) if !m.volume_flagged() => break m,
                _ => continue,
            }
        };
        objects.push(Arc::new(model));
    }
    Ok(ObjectSequence::new(seed, objects))
}
