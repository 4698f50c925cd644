//! Placement scoring. Every policy reports a score where lower is better, so selection code is
//! shared.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Heightmap};
use crate::object::{OrientedObject, SIDE_DIRS};
use crate::placement::Placement;
use crate::tsdf::TsdfField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    /// Weight of the distance-field term.
    pub alpha: f64,
    /// Weight of the shape-regularity term.
    pub beta: f64,
    /// Weight of the height term.
    pub gamma: f64,
    /// Weight of the size-balancing term.
    pub delta: f64,
    /// Seed of the random policy.
    pub seed: u64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            alpha: 2.5,
            beta: 10.0,
            gamma: 1.0,
            delta: 80.0,
            seed: 0,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a non-negative number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sdf,
    Dbl,
    Hm,
    Mta,
    Ff,
    Random,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Sdf,
        Method::Dbl,
        Method::Hm,
        Method::Mta,
        Method::Ff,
        Method::Random,
    ];

    /// Whether the method ranks placements by a score (as opposed to enumeration order or chance).
    pub fn is_scored(self) -> bool {
        matches!(self, Method::Sdf | Method::Dbl | Method::Hm | Method::Mta)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Method::Sdf => "sdf",
            Method::Dbl => "dbl",
            Method::Hm => "hm",
            Method::Mta => "mta",
            Method::Ff => "ff",
            Method::Random => "random",
        }
    }
}

/// A placement policy together with its size-balancing switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodSpec {
    pub method: Method,
    pub balanced: bool,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            balanced: false,
        }
    }

    pub fn balanced(method: Method) -> Self {
        Self { method, balanced: true }
    }

    /// The same policy with size balancing switched on where it applies.
    pub fn with_balance(self) -> Self {
        Self {
            balanced: self.balanced || self.method.is_scored(),
            ..self
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.method, self.balanced) {
            (Method::Sdf, true) => f.write_str("sdf-balanced"),
            (m, true) => write!(f, "{}+balance", m.tag()),
            (m, false) => f.write_str(m.tag()),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s.trim() {
            "sdf" => MethodSpec::new(Method::Sdf),
            "sdf-balanced" => MethodSpec::balanced(Method::Sdf),
            "dbl" => MethodSpec::new(Method::Dbl),
            "hm" => MethodSpec::new(Method::Hm),
            "mta" => MethodSpec::new(Method::Mta),
            "ff" => MethodSpec::new(Method::Ff),
            "random" => MethodSpec::new(Method::Random),
            "dbl+balance" => MethodSpec::balanced(Method::Dbl),
            "hm+balance" => MethodSpec::balanced(Method::Hm),
            "mta+balance" => MethodSpec::balanced(Method::Mta),
            other => return Err(Error::UnknownMethod(other.to_string())),
        };
        Ok(spec)
    }
}

impl Serialize for MethodSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MethodSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The three weighted terms of the distance-field objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SdfTerms {
    /// `alpha / V * sum of the field over the object's cells`.
    pub distance: f64,
    /// `beta * (1 - cbrt(V / (W * D * H)))`.
    pub regularity: f64,
    /// `gamma * z`.
    pub height: f64,
}

impl SdfTerms {
    pub fn total(&self) -> f64 {
        self.distance + self.regularity + self.height
    }
}

pub fn regularity_term(obj: &OrientedObject, beta: f64) -> f64 {
    beta * (1.0 - (obj.volume() as f64 / obj.bbox_volume() as f64).cbrt())
}

/// `delta * (1 - cbrt(V / (X * Y * Z)))`.
pub fn balance_term(volume: u32, grid: &GridSpec, delta: f64) -> f64 {
    delta * (1.0 - (volume as f64 / grid.cell_count() as f64).cbrt())
}

/// Term decomposition of the distance-field objective at a feasible placement.
pub fn sdf_terms(field: &TsdfField, obj: &OrientedObject, p: Placement, cfg: &HeuristicConfig) -> SdfTerms {
    let sum = field.run_sum(obj, p.x, p.y, p.z as usize);
    SdfTerms {
        distance: cfg.alpha * sum / obj.volume() as f64,
        regularity: regularity_term(obj, cfg.beta),
        height: cfg.gamma * p.z as f64,
    }
}

pub fn score_sdf_min(field: &TsdfField, obj: &OrientedObject, p: Placement, cfg: &HeuristicConfig) -> f64 {
    sdf_terms(field, obj, p, cfg).total()
}

pub fn score_size_balanced(
    field: &TsdfField,
    obj: &OrientedObject,
    p: Placement,
    cfg: &HeuristicConfig,
    grid: &GridSpec,
) -> f64 {
    score_sdf_min(field, obj, p, cfg) + balance_term(obj.volume(), grid, cfg.delta)
}

/// Deepest-bottom-left key. The score carries `z`; the tie key orders the rest.
pub fn score_dbl(p: Placement) -> f64 {
    p.z as f64
}

/// Total heightmap increase caused by the placement, in cell units.
pub fn score_hm(hm: &Heightmap, obj: &OrientedObject, p: Placement) -> u64 {
    obj.columns()
        .iter()
        .map(|c| {
            let top = p.z + c.top;
            top.saturating_sub(hm.get(p.x + c.i, p.y + c.j)) as u64
        })
        .sum()
}

/// Object faces touching packed cells, the floor or the walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContactFaces {
    /// Horizontal faces (object underside on the floor or on packed cells).
    pub bottom: u32,
    /// Vertical faces.
    pub side: u32,
}

impl ContactFaces {
    pub fn total(&self) -> u32 {
        self.bottom + self.side
    }

    pub fn area_cm2(&self, grid: &GridSpec) -> f64 {
        let side = grid.res_xy * grid.res_z * 1e4;
        let bottom = grid.res_xy * grid.res_xy * 1e4;
        self.side as f64 * side + self.bottom as f64 * bottom
    }
}

/// Counts the contact faces of an object resting at `p`.
///
/// The object rests on the terrain, so only the lowest cell of a column can touch from below and
/// nothing touches from above.
pub fn contact_faces(hm: &Heightmap, obj: &OrientedObject, p: Placement) -> ContactFaces {
    let (cw, cd) = (hm.width() as i64, hm.depth() as i64);
    let mut faces = ContactFaces::default();
    for (ci, col) in obj.columns().iter().enumerate() {
        let (x, y) = (p.x + col.i, p.y + col.j);
        if p.z + col.bottom == hm.get(x, y) {
            faces.bottom += 1;
        }
        for (dir, (dx, dy)) in SIDE_DIRS.iter().enumerate() {
            let exposed = obj.exposed(ci, dir);
            if exposed.is_empty() {
                continue;
            }
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= cw || ny >= cd {
                faces.side += exposed.len() as u32;
                continue;
            }
            let limit = hm.get(nx as usize, ny as usize).saturating_sub(p.z);
            faces.side += exposed.partition_point(|&k| k < limit) as u32;
        }
    }
    faces
}

/// Negated contact area in cm^2.
pub fn score_mta(hm: &Heightmap, obj: &OrientedObject, p: Placement, grid: &GridSpec) -> f64 {
    -contact_faces(hm, obj, p).area_cm2(grid)
}

/// Ordering used when two scores are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TieKey {
    pub z: u32,
    pub y: usize,
    pub x: usize,
    pub r: usize,
    pub object: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPlacement {
    pub placement: Placement,
    /// Index of the object in its sequence.
    pub object: usize,
    pub score: f64,
    pub terms: Option<SdfTerms>,
}

impl ScoredPlacement {
    pub fn tie_key(&self) -> TieKey {
        let p = self.placement;
        TieKey {
            z: p.z,
            y: p.y,
            x: p.x,
            r: p.r,
            object: self.object,
        }
    }

    /// Total order: score, then tie key.
    pub fn rank(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| self.tie_key().cmp(&other.tie_key()))
    }
}

/// Minimum score, ties broken by the tie key.
pub fn select_placement(candidates: &[ScoredPlacement]) -> Result<&ScoredPlacement> {
    candidates.iter().min_by(|a, b| a.rank(b)).ok_or(Error::NoCandidates)
}

/// Scores one feasible placement under `method`, without the size-balancing term.
///
/// Unscored methods (first fit, random) get `0`.
pub fn base_score(
    method: Method,
    hm: &Heightmap,
    field: &TsdfField,
    obj: &OrientedObject,
    p: Placement,
    cfg: &HeuristicConfig,
) -> (f64, Option<SdfTerms>) {
    match method {
        Method::Sdf => {
            let terms = sdf_terms(field, obj, p, cfg);
            (terms.total(), Some(terms))
        }
        Method::Dbl => (score_dbl(p), None),
        Method::Hm => (score_hm(hm, obj, p) as f64, None),
        Method::Mta => (score_mta(hm, obj, p, field.grid()), None),
        Method::Ff | Method::Random => (0.0, None),
    }
}
