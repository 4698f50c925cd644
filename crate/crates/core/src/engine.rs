//! The packing loop: fixed-sequence and buffered modes, state upkeep and metrics.
//!
//! After every placement the heightmap is updated analytically, the distance field is updated
//! locally, and each waiting object's feasible set and cached scores are refreshed only where
//! the container changed. With `incremental` off everything is recomputed from scratch each
//! step instead; both paths produce identical runs.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ColumnRect, GridSpec, Heightmap};
use crate::heuristics::{
    balance_term, base_score, sdf_terms, HeuristicConfig, Method, MethodSpec, ScoredPlacement, SdfTerms,
};
use crate::object::ObjectModel;
use crate::placement::{apply_placement_in_place, drop_height, FeasibleSet, Placement};
use crate::sequence::ObjectSequence;
use crate::tsdf::{CellBox, TsdfField, TsdfParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub grid: GridSpec,
    pub tsdf: TsdfParams,
    pub heuristic: HeuristicConfig,
    /// The run stops once this many steps end without a placement.
    pub fail_limit: usize,
    /// Reuse distance field and candidate evaluations across steps.
    pub incremental: bool,
    /// Check the incremental state against a full recomputation after every step.
    pub verify: bool,
    /// Keep a per-step log and heightmap snapshots.
    pub record_log: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            tsdf: TsdfParams::default(),
            heuristic: HeuristicConfig::default(),
            fail_limit: 5,
            incremental: true,
            verify: false,
            record_log: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.tsdf.validate()?;
        self.heuristic.validate()?;
        if self.fail_limit == 0 {
            return Err(Error::InvalidConfig("fail_limit must be at least 1".into()));
        }
        Ok(())
    }
}

/// How the next object is chosen from the buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRule {
    /// Largest bounding box first; the first object with a feasible placement is packed.
    VolumeDecreasing,
    /// The object and placement with the lowest size-balanced score over the whole buffer.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mode {
    Fixed,
    Buffered { k: usize, order: OrderRule },
}

impl Mode {
    pub fn buffer_k(&self) -> usize {
        match self {
            Mode::Fixed => 1,
            Mode::Buffered { k, .. } => *k,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Fixed => f.write_str("fixed"),
            Mode::Buffered {
                order: OrderRule::VolumeDecreasing,
                ..
            } => f.write_str("buffered-volume"),
            Mode::Buffered {
                order: OrderRule::Heuristic,
                ..
            } => f.write_str("buffered-heuristic"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedObject {
    /// Position in the sequence.
    pub object: usize,
    pub name: String,
    pub placement: Placement,
    pub volume: u32,
    /// Occupied cell bounds in container coordinates, half-open.
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum StepRecord {
    Placed {
        step: usize,
        object: usize,
        name: String,
        placement: Placement,
        score: f64,
        /// Distance-field objective terms at the chosen placement, whatever the method.
        terms: SdfTerms,
    },
    Failed {
        step: usize,
        /// The object dropped from the buffer.
        object: usize,
        name: String,
    },
}

#[derive(Debug, Clone)]
pub struct PackingState {
    pub heightmap: Heightmap,
    pub field: TsdfField,
    pub packed: Vec<PackedObject>,
    pub failures: usize,
    pub steps: usize,
}

impl PackingState {
    pub fn new(cfg: &EngineConfig) -> Result<Self> {
        let heightmap = cfg.grid.empty_heightmap();
        let field = TsdfField::build(&heightmap, &cfg.grid, cfg.tsdf)?;
        Ok(Self {
            heightmap,
            field,
            packed: Vec::new(),
            failures: 0,
            steps: 0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    pub seed: u64,
    pub method: String,
    pub mode: String,
    pub buffer_k: usize,
    pub packed_volume_cm3: f64,
    pub compactness: f64,
    pub objects_packed: usize,
    pub failures: usize,
    /// Mean wall-clock decision time per step (placement or failure), in milliseconds.
    pub time_per_object_ms: f64,
}

#[derive(Debug, Clone)]
pub struct PackingRun {
    pub result: PackingResult,
    pub state: PackingState,
    pub log: Vec<StepRecord>,
    /// Container heightmap after each step, when the log is recorded.
    pub snapshots: Vec<Heightmap>,
}

/// Packed volume, compactness and object count of a state.
pub fn compute_metrics(state: &PackingState, grid: &GridSpec) -> (f64, f64, usize) {
    let cells: u64 = state.packed.iter().map(|p| p.volume as u64).sum();
    let volume = cells as f64 * grid.voxel_volume_cm3();
    let Some(first) = state.packed.first() else {
        return (0.0, 0.0, 0);
    };
    let (mut lo, mut hi) = (first.lo, first.hi);
    for p in &state.packed[1..] {
        for a in 0..3 {
            lo[a] = lo[a].min(p.lo[a]);
            hi[a] = hi[a].max(p.hi[a]);
        }
    }
    let bbox: u64 = (0..3).map(|a| (hi[a] - lo[a]) as u64).product();
    (volume, cells as f64 / bbox as f64, state.packed.len())
}

/// One waiting object with its feasible set and cached scores.
#[derive(Debug, Clone)]
struct Candidate {
    object: usize,
    model: Arc<ObjectModel>,
    feasible: FeasibleSet,
    /// Base score per orientation and slot; meaningful only for feasible slots.
    scores: Vec<Vec<f64>>,
    /// Size-balancing term per orientation (zero when balancing is off).
    balance: Vec<f64>,
}

struct Packer<'a> {
    cfg: &'a EngineConfig,
    method: MethodSpec,
    order: OrderRule,
    rng: ChaCha8Rng,
}

impl<'a> Packer<'a> {
    fn candidate(&self, object: usize, model: Arc<ObjectModel>, state: &PackingState) -> Candidate {
        let feasible = FeasibleSet::enumerate(&state.heightmap, &model, &self.cfg.grid);
        let delta = if self.method.balanced {
            self.cfg.heuristic.delta
        } else {
            0.0
        };
        let balance = model
            .orientations()
            .iter()
            .map(|o| {
                if delta > 0.0 {
                    balance_term(o.volume(), &self.cfg.grid, delta)
                } else {
                    0.0
                }
            })
            .collect();
        let mut c = Candidate {
            object,
            model,
            feasible,
            scores: Vec::new(),
            balance,
        };
        c.scores = self.all_scores(&c, state);
        c
    }

    fn all_scores(&self, c: &Candidate, state: &PackingState) -> Vec<Vec<f64>> {
        c.feasible
            .layers()
            .iter()
            .enumerate()
            .map(|(r, layer)| {
                (0..layer.slots.len())
                    .map(|i| self.slot_score(c, state, r, i))
                    .collect()
            })
            .collect()
    }

    fn slot_score(&self, c: &Candidate, state: &PackingState, r: usize, i: usize) -> f64 {
        if !self.method.method.is_scored() || !c.feasible.layers()[r].slots[i].feasible {
            return 0.0;
        }
        let p = c.feasible.placement(r, i);
        let obj = c.model.orientation(r);
        base_score(
            self.method.method,
            &state.heightmap,
            &state.field,
            obj,
            p,
            &self.cfg.heuristic,
        )
        .0
    }

    /// Brings a candidate up to date after the container changed inside `rect`, with the field
    /// values changing inside `field_box`.
    fn refresh(
        &self,
        c: &mut Candidate,
        old: &Heightmap,
        state: &PackingState,
        rect: &ColumnRect,
        field_box: Option<CellBox>,
    ) {
        let touched = c
            .feasible
            .refresh(old, &state.heightmap, &c.model, &self.cfg.grid, rect);
        if !self.method.method.is_scored() {
            return;
        }
        for &(r, i) in &touched {
            c.scores[r][i] = self.slot_score(c, state, r, i);
        }
        let grid = &self.cfg.grid;
        let extra: Vec<(usize, usize)> = match self.method.method {
            Method::Sdf => match field_box {
                Some(b) => {
                    let rect = ColumnRect::new(b.lo[0], b.lo[1], b.hi[0], b.hi[1]);
                    let mut out = Vec::new();
                    for (r, layer) in c.feasible.layers().iter().enumerate() {
                        if layer.slots.is_empty() {
                            continue;
                        }
                        let h = c.model.orientation(r).height();
                        for i in layer.indices_touching(&rect) {
                            let s = layer.slots[i];
                            let z = s.z as usize;
                            if s.feasible && z < b.hi[2] && b.lo[2] < z + h {
                                out.push((r, i));
                            }
                        }
                    }
                    out
                }
                None => Vec::new(),
            },
            Method::Mta => {
                let ring = rect.dilate(1, grid.cells_x, grid.cells_y);
                c.feasible
                    .layers()
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| !l.slots.is_empty())
                    .flat_map(|(r, l)| l.indices_touching(&ring).map(move |i| (r, i)))
                    .collect()
            }
            _ => Vec::new(),
        };
        for (r, i) in extra {
            c.scores[r][i] = self.slot_score(c, state, r, i);
        }
    }

    /// Lowest-ranked feasible placement of one candidate under the scored policies, or the
    /// first feasible one for unscored policies.
    fn best(&self, c: &Candidate) -> Option<ScoredPlacement> {
        if !self.method.method.is_scored() {
            return c.feasible.placements().next().map(|p| ScoredPlacement {
                placement: p,
                object: c.object,
                score: 0.0,
                terms: None,
            });
        }
        let mut best: Option<ScoredPlacement> = None;
        for (r, layer) in c.feasible.layers().iter().enumerate() {
            for (i, s) in layer.slots.iter().enumerate() {
                if !s.feasible {
                    continue;
                }
                let sp = ScoredPlacement {
                    placement: Placement::new(i % layer.nx, i / layer.nx, s.z, r),
                    object: c.object,
                    score: c.scores[r][i] + c.balance[r],
                    terms: None,
                };
                if best.as_ref().is_none_or(|b| sp.rank(b).is_lt()) {
                    best = Some(sp);
                }
            }
        }
        best
    }

    fn random_pick(&mut self, buffer: &[Candidate], pool: &[usize]) -> Option<ScoredPlacement> {
        let total: usize = pool.iter().map(|&b| buffer[b].feasible.len()).sum();
        if total == 0 {
            return None;
        }
        let mut k = self.rng.random_range(0..total);
        for &b in pool {
            let n = buffer[b].feasible.len();
            if k < n {
                let p = buffer[b]
                    .feasible
                    .placements()
                    .nth(k)
                    .expect("index within feasible count");
                return Some(ScoredPlacement {
                    placement: p,
                    object: buffer[b].object,
                    score: 0.0,
                    terms: None,
                });
            }
            k -= n;
        }
        None
    }

    /// Picks the buffer slot and placement for this step.
    fn choose(&mut self, buffer: &[Candidate]) -> Option<(usize, ScoredPlacement)> {
        let position = |object: usize| {
            buffer
                .iter()
                .position(|c| c.object == object)
                .expect("object in buffer")
        };
        match self.order {
            OrderRule::VolumeDecreasing => {
                let mut order: Vec<usize> = (0..buffer.len()).collect();
                order.sort_by_key(|&b| std::cmp::Reverse(buffer[b].model.reference_bbox_volume()));
                for b in order {
                    let pick = if self.method.method == Method::Random {
                        self.random_pick(buffer, &[b])
                    } else {
                        self.best(&buffer[b])
                    };
                    if let Some(sp) = pick {
                        return Some((b, sp));
                    }
                }
                None
            }
            OrderRule::Heuristic => match self.method.method {
                Method::Random => {
                    let pool: Vec<usize> = (0..buffer.len()).collect();
                    self.random_pick(buffer, &pool).map(|sp| (position(sp.object), sp))
                }
                Method::Ff => buffer
                    .iter()
                    .enumerate()
                    .find_map(|(b, c)| self.best(c).map(|sp| (b, sp))),
                _ => buffer
                    .iter()
                    .enumerate()
                    .filter_map(|(b, c)| self.best(c).map(|sp| (b, sp)))
                    .min_by(|a, b| a.1.rank(&b.1)),
            },
        }
    }

    fn verify(&self, buffer: &[Candidate], state: &PackingState) -> Result<()> {
        let fresh = TsdfField::build(&state.heightmap, &self.cfg.grid, self.cfg.tsdf)?;
        if fresh != state.field {
            return Err(Error::Internal(format!(
                "distance field diverged from a rebuild after step {}",
                state.steps
            )));
        }
        for c in buffer {
            let set = FeasibleSet::enumerate(&state.heightmap, &c.model, &self.cfg.grid);
            if set != c.feasible {
                return Err(Error::Internal(format!(
                    "feasible set of object {} diverged after step {}",
                    c.object, state.steps
                )));
            }
            for (r, layer) in c.feasible.layers().iter().enumerate() {
                for (i, s) in layer.slots.iter().enumerate() {
                    if s.feasible && self.slot_score(c, state, r, i).to_bits() != c.scores[r][i].to_bits() {
                        return Err(Error::Internal(format!(
                            "cached score of object {} diverged after step {}",
                            c.object, state.steps
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Packs a sequence under `method` in the given mode.
///
/// Fixed mode is the one-slot buffer. A step in which no buffered object can be placed counts
/// one failure and drops the oldest buffered object; the run ends when the failure limit is
/// reached or the sequence and buffer are exhausted.
pub fn pack(sequence: &ObjectSequence, method: MethodSpec, mode: Mode, cfg: &EngineConfig) -> Result<PackingRun> {
    cfg.validate()?;
    let (k, order) = match mode {
        Mode::Fixed => (1, OrderRule::VolumeDecreasing),
        Mode::Buffered { k, order } => (k, order),
    };
    if k == 0 {
        return Err(Error::InvalidConfig("buffer size must be at least 1".into()));
    }
    let method_eff = match order {
        OrderRule::Heuristic => method.with_balance(),
        OrderRule::VolumeDecreasing => method,
    };
    let mut packer = Packer {
        cfg,
        method: method_eff,
        order,
        rng: ChaCha8Rng::seed_from_u64(cfg.heuristic.seed ^ sequence.seed.rotate_left(32)),
    };
    let mut state = PackingState::new(cfg)?;
    let mut buffer: Vec<Candidate> = Vec::with_capacity(k);
    let mut cursor = 0;
    let mut log = Vec::new();
    let mut snapshots = Vec::new();
    let mut elapsed = 0.0f64;

    loop {
        let start = Instant::now();
        while buffer.len() < k && cursor < sequence.len() {
            buffer.push(packer.candidate(cursor, sequence.objects[cursor].clone(), &state));
            cursor += 1;
        }
        if buffer.is_empty() {
            break;
        }
        let choice = packer.choose(&buffer);
        state.steps += 1;
        match choice {
            Some((b, sp)) => {
                let chosen = buffer.remove(b);
                let obj = chosen.model.orientation(sp.placement.r);
                let p = sp.placement;
                let terms = sdf_terms(&state.field, obj, p, &cfg.heuristic);
                let old = state.heightmap.clone();
                apply_placement_in_place(&mut state.heightmap, obj, p, cfg.grid.cells_z)?;
                let (lo, hi) = obj.occupied_bounds();
                state.packed.push(PackedObject {
                    object: chosen.object,
                    name: chosen.model.name().to_string(),
                    placement: p,
                    volume: obj.volume(),
                    lo: [p.x + lo[0], p.y + lo[1], p.z as usize + lo[2]],
                    hi: [p.x + hi[0], p.y + hi[1], p.z as usize + hi[2]],
                });
                if cfg.incremental {
                    let update = state.field.local_update(&old, &state.heightmap)?;
                    if let Some(rect) = old.changed_rect(&state.heightmap) {
                        for c in buffer.iter_mut() {
                            packer.refresh(c, &old, &state, &rect, update.changed);
                        }
                    }
                } else {
                    state.field = TsdfField::build(&state.heightmap, &cfg.grid, cfg.tsdf)?;
                    for c in buffer.iter_mut() {
                        *c = packer.candidate(c.object, c.model.clone(), &state);
                    }
                }
                if cfg.record_log {
                    log.push(StepRecord::Placed {
                        step: state.steps,
                        object: chosen.object,
                        name: chosen.model.name().to_string(),
                        placement: p,
                        score: sp.score,
                        terms,
                    });
                }
            }
            None => {
                let dropped = buffer.remove(0);
                state.failures += 1;
                if cfg.record_log {
                    log.push(StepRecord::Failed {
                        step: state.steps,
                        object: dropped.object,
                        name: dropped.model.name().to_string(),
                    });
                }
            }
        }
        elapsed += start.elapsed().as_secs_f64();
        if cfg.verify {
            packer.verify(&buffer, &state)?;
        }
        if cfg.record_log {
            snapshots.push(state.heightmap.clone());
        }
        if state.failures >= cfg.fail_limit {
            break;
        }
    }

    let (packed_volume_cm3, compactness, objects_packed) = compute_metrics(&state, &cfg.grid);
    let result = PackingResult {
        seed: sequence.seed,
        method: method.to_string(),
        mode: mode.to_string(),
        buffer_k: k,
        packed_volume_cm3,
        compactness,
        objects_packed,
        failures: state.failures,
        time_per_object_ms: if state.steps == 0 {
            0.0
        } else {
            elapsed * 1e3 / state.steps as f64
        },
    };
    Ok(PackingRun {
        result,
        state,
        log,
        snapshots,
    })
}

pub fn pack_fixed(sequence: &ObjectSequence, method: MethodSpec, cfg: &EngineConfig) -> Result<PackingRun> {
    pack(sequence, method, Mode::Fixed, cfg)
}

pub fn pack_buffered(
    sequence: &ObjectSequence,
    method: MethodSpec,
    k: usize,
    order: OrderRule,
    cfg: &EngineConfig,
) -> Result<PackingRun> {
    pack(sequence, method, Mode::Buffered { k, order }, cfg)
}

/// Re-applies the placements of a step log to an empty container, checking that every object
/// rests at its drop height.
pub fn replay(sequence: &ObjectSequence, log: &[StepRecord], grid: &GridSpec) -> Result<Heightmap> {
    let mut hm = grid.empty_heightmap();
    for rec in log {
        if let StepRecord::Placed { object, placement, .. } = rec {
            let model = sequence
                .objects
                .get(*object)
                .ok_or_else(|| Error::Internal(format!("log refers to missing object {object}")))?;
            let obj = model.orientation(placement.r);
            let z = drop_height(&hm, obj, placement.x, placement.y)?;
            if z != placement.z {
                return Err(Error::Internal(format!(
                    "object {object} logged at z = {} but rests at z = {z}",
                    placement.z
                )));
            }
            apply_placement_in_place(&mut hm, obj, *placement, grid.cells_z)?;
        }
    }
    Ok(hm)
}
