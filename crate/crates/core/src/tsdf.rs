//! Truncated distance field of the container, built from its top-down heightmap.
//!
//! Free cells hold the Euclidean distance to the nearest occupied cell, clamped at the
//! truncation distance. Occupied cells (everything under the heightmap surface) hold `-1`.
//! The floor and the four walls act as a one-cell shell of occupied cells; the open top does not.
//!
//! Distances come from an exact separable transform (closed form along `z`, lower envelopes of
//! parabolas along `x` and `y`). With unit weights every intermediate is an integer, so results
//! are exact and the local update reproduces a full rebuild bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Heightmap};
use crate::object::OrientedObject;

/// Value stored for occupied cells.
pub const OCCUPIED: f64 = -1.0;

/// Largest accepted truncation distance, in the field's distance units.
pub const MAX_TAU: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceUnits {
    /// Every cell is a unit cube regardless of its physical size.
    #[default]
    Index,
    /// Physical meters on the anisotropic grid.
    Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsdfParams {
    pub tau: f64,
    #[serde(default)]
    pub units: DistanceUnits,
}

impl Default for TsdfParams {
    fn default() -> Self {
        Self {
            tau: 5.0,
            units: DistanceUnits::Index,
        }
    }
}

impl TsdfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= MAX_TAU) {
            return Err(Error::InvalidConfig(format!(
                "truncation must be in (0, {MAX_TAU}], got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// Squared length of one cell step along x, y, z.
    pub fn weights(&self, grid: &GridSpec) -> [f64; 3] {
        match self.units {
            DistanceUnits::Index => [1.0, 1.0, 1.0],
            DistanceUnits::Metric => [
                grid.res_xy * grid.res_xy,
                grid.res_xy * grid.res_xy,
                grid.res_z * grid.res_z,
            ],
        }
    }

    /// Number of cells along each axis spanned by the truncation distance.
    pub fn margins(&self, grid: &GridSpec) -> [usize; 3] {
        let w = self.weights(grid);
        w.map(|wi| (self.tau / wi.sqrt() - 1e-12).ceil().max(0.0) as usize)
    }
}

/// Half-open box of container cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl CellBox {
    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.lo[a] >= self.hi[a])
    }

    pub fn intersects(&self, other: &CellBox) -> bool {
        (0..3).all(|a| self.lo[a] < other.hi[a] && other.lo[a] < self.hi[a])
    }

    pub fn contains(&self, p: [usize; 3]) -> bool {
        (0..3).all(|a| self.lo[a] <= p[a] && p[a] < self.hi[a])
    }

    pub fn cells(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (0..3).map(|a| self.hi[a] - self.lo[a]).product()
        }
    }

    fn include(&mut self, p: [usize; 3]) {
        for ((lo, hi), &c) in self.lo.iter_mut().zip(&mut self.hi).zip(&p) {
            *lo = (*lo).min(c);
            *hi = (*hi).max(c + 1);
        }
    }
}

/// Outcome of an incremental update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldUpdate {
    /// Cells whose values were recomputed.
    pub recomputed: Option<CellBox>,
    /// Bounding box of the cells whose value actually changed.
    pub changed: Option<CellBox>,
}

impl FieldUpdate {
    pub const NONE: FieldUpdate = FieldUpdate {
        recomputed: None,
        changed: None,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsdfField {
    grid: GridSpec,
    params: TsdfParams,
    /// `z` fastest: index `(y * X + x) * Z + z`.
    values: Vec<f64>,
    /// Per-column prefix sums over `z`: index `(y * X + x) * (Z + 1) + k`.
    prefix: Vec<f64>,
}

/// Inclusive-exclusive window in padded coordinates (the shell sits at -1 and at X / Y).
#[derive(Debug, Clone, Copy)]
struct Window {
    lo: [i64; 3],
    hi: [i64; 3],
}

impl Window {
    fn len(&self, a: usize) -> usize {
        (self.hi[a] - self.lo[a]) as usize
    }
}

/// Exact 1D squared distance transform (lower envelope of parabolas); `INFINITY` marks cells
/// without a source.
fn envelope_1d(f: &[f64], w: f64, out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + w * (q * q) as f64;
        while let Some(&top) = v.last() {
            let ft = f[top] + w * (top * top) as f64;
            let s = (fq - ft) / (2.0 * w * (q - top) as f64);
            if s <= *z.last().expect("boundary per site") {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
        if v.is_empty() {
            v.push(q);
            z.push(f64::NEG_INFINITY);
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < p as f64 {
            k += 1;
        }
        let d = p as f64 - v[k] as f64;
        *o = w * d * d + f[v[k]];
    }
}

/// Squared distances for every cell of `win`, considering only sources inside `win`.
/// Layout: `z` fastest, then `x`, then `y`.
fn squared_distances(heightmap: &Heightmap, cells_z: usize, win: Window, weights: [f64; 3]) -> Vec<f64> {
    let (nx, ny, nz) = (win.len(0), win.len(1), win.len(2));
    let idx = |x: usize, y: usize, z: usize| (y * nx + x) * nz + z;
    let (cw, cd) = (heightmap.width() as i64, heightmap.depth() as i64);
    let mut g = vec![0.0; nx * ny * nz];
    debug_assert!(win.hi[2] <= cells_z as i64);

    // closed form along z: the column is solid from the floor up to its height
    for y in 0..ny {
        let py = win.lo[1] + y as i64;
        for x in 0..nx {
            let px = win.lo[0] + x as i64;
            let base = idx(x, y, 0);
            if px < 0 || py < 0 || px >= cw || py >= cd {
                continue; // wall shell, every cell is a source
            }
            let h = heightmap.get(px as usize, py as usize) as i64;
            let top_source = h - 1;
            for z in 0..nz {
                let pz = win.lo[2] + z as i64;
                g[base + z] = if pz < h {
                    0.0
                } else if top_source >= win.lo[2] {
                    let d = (pz - top_source) as f64;
                    weights[2] * d * d
                } else {
                    f64::INFINITY
                };
            }
        }
    }

    let mut line = Vec::new();
    let mut out = Vec::new();
    let (mut v, mut zb) = (Vec::new(), Vec::new());

    line.resize(nx, 0.0);
    out.resize(nx, 0.0);
    for y in 0..ny {
        for z in 0..nz {
            for x in 0..nx {
                line[x] = g[idx(x, y, z)];
            }
            envelope_1d(&line, weights[0], &mut out, &mut v, &mut zb);
            for x in 0..nx {
                g[idx(x, y, z)] = out[x];
            }
        }
    }

    line.resize(ny, 0.0);
    out.resize(ny, 0.0);
    for x in 0..nx {
        for z in 0..nz {
            for y in 0..ny {
                line[y] = g[idx(x, y, z)];
            }
            envelope_1d(&line, weights[1], &mut out, &mut v, &mut zb);
            for y in 0..ny {
                g[idx(x, y, z)] = out[y];
            }
        }
    }
    g
}

#[inline]
fn min_shifted(dst: &mut [i32], src: &[i32], w: i32) {
    // Both operands are at most `MAX_TAU^2 + 1`, so the sum cannot wrap.
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = (*d).min(s.wrapping_add(w));
    }
}

/// Squared distances in index units, capped at `cap`, for the cells `x in [x0, x1)`,
/// `y in [y0, y1)`, `z in [z0, z1)` of the container (padded coordinates, walls at -1 and X / Y).
///
/// A source more than `m` cells away along x or y is farther than the truncation, so each
/// horizontal pass only looks `m` cells each way. Layout: `x` fastest, then `z`, then `y`.
fn capped_squared_distances(heightmap: &Heightmap, win: Window, cap: i32, m: usize) -> Vec<i32> {
    let (nx, ny, nz) = (win.len(0), win.len(1), win.len(2));
    let (cw, cd) = (heightmap.width() as i64, heightmap.depth() as i64);
    let row = |y: usize, z: usize| (y * nz + z) * nx;
    let mut g = vec![0i32; nx * ny * nz];
    for y in 0..ny {
        let py = win.lo[1] + y as i64;
        for x in 0..nx {
            let px = win.lo[0] + x as i64;
            if px < 0 || py < 0 || px >= cw || py >= cd {
                continue;
            }
            let h = heightmap.get(px as usize, py as usize) as i64;
            for z in 0..nz {
                let pz = win.lo[2] + z as i64;
                let d = pz - h + 1;
                g[row(y, z) + x] = if d <= 0 { 0 } else { (d * d).min(cap as i64) as i32 };
            }
        }
    }
    let m = m.min(nx.max(ny));
    let mut out = g.clone();
    for r in 0..ny * nz {
        let (src, dst) = (&g[r * nx..(r + 1) * nx], &mut out[r * nx..(r + 1) * nx]);
        for d in 1..=m.min(nx - 1) {
            let w = (d * d) as i32;
            min_shifted(&mut dst[d..], &src[..nx - d], w);
            min_shifted(&mut dst[..nx - d], &src[d..], w);
        }
    }
    g.copy_from_slice(&out);
    for y in 0..ny {
        for z in 0..nz {
            let dst = row(y, z);
            for d in 1..=m {
                let w = (d * d) as i32;
                if w >= cap {
                    break;
                }
                for yy in [y.checked_sub(d), Some(y + d).filter(|&v| v < ny)]
                    .into_iter()
                    .flatten()
                {
                    let src = row(yy, z);
                    min_shifted(&mut g[dst..dst + nx], &out[src..src + nx], w);
                }
            }
        }
    }
    g
}

impl TsdfField {
    pub fn build(heightmap: &Heightmap, grid: &GridSpec, params: TsdfParams) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        heightmap.check_grid(grid)?;
        let (x, y, z) = (grid.cells_x, grid.cells_y, grid.cells_z);
        let mut field = Self {
            grid: *grid,
            params,
            values: vec![0.0; x * y * z],
            prefix: vec![0.0; x * y * (z + 1)],
        };
        field.recompute(
            heightmap,
            CellBox {
                lo: [0, 0, 0],
                hi: [x, y, z],
            },
        );
        Ok(field)
    }

    /// Recomputes the cells in `region` and the prefix sums of the columns it touches.
    /// Returns the bounding box of cells whose value changed.
    fn recompute(&mut self, heightmap: &Heightmap, region: CellBox) -> Option<CellBox> {
        let g = self.grid;
        let m = self.params.margins(&g);
        let tau = self.params.tau;
        let mut win = Window { lo: [0; 3], hi: [0; 3] };
        let limits = [g.cells_x as i64 + 1, g.cells_y as i64 + 1];
        for a in 0..2 {
            win.lo[a] = (region.lo[a] as i64 - m[a] as i64).max(-1);
            win.hi[a] = (region.hi[a] as i64 + m[a] as i64).min(limits[a]);
        }
        let mut changed: Option<CellBox> = None;
        let mut store = |values: &mut [f64], x: usize, y: usize, z: usize, phi: f64| {
            let slot = &mut values[(y * g.cells_x + x) * g.cells_z + z];
            if *slot != phi {
                *slot = phi;
                match changed.as_mut() {
                    Some(b) => b.include([x, y, z]),
                    None => {
                        changed = Some(CellBox {
                            lo: [x, y, z],
                            hi: [x + 1, y + 1, z + 1],
                        })
                    }
                }
            }
        };
        match self.params.units {
            DistanceUnits::Index => {
                // squared distances are integers: anything at or above `cap` exceeds tau
                let cap = (tau * tau).floor() as i32 + 1;
                win.lo[2] = region.lo[2] as i64;
                win.hi[2] = region.hi[2] as i64;
                let d2 = capped_squared_distances(heightmap, win, cap, m[0]);
                let (nx, nz) = (win.len(0), win.len(2));
                for y in region.lo[1]..region.hi[1] {
                    let wy = (y as i64 - win.lo[1]) as usize;
                    for z in region.lo[2]..region.hi[2] {
                        let base = (wy * nz + (z - region.lo[2])) * nx;
                        for x in region.lo[0]..region.hi[0] {
                            let d = d2[base + (x as i64 - win.lo[0]) as usize];
                            let phi = if d == 0 {
                                OCCUPIED
                            } else if d >= cap {
                                tau
                            } else {
                                (d as f64).sqrt().min(tau)
                            };
                            store(&mut self.values, x, y, z, phi);
                        }
                    }
                }
            }
            DistanceUnits::Metric => {
                win.lo[2] = (region.lo[2] as i64 - m[2] as i64).max(-1);
                win.hi[2] = (region.hi[2] as i64 + m[2] as i64).min(g.cells_z as i64);
                let weights = self.params.weights(&g);
                let d2 = squared_distances(heightmap, g.cells_z, win, weights);
                let (nx, nz) = (win.len(0), win.len(2));
                for y in region.lo[1]..region.hi[1] {
                    for x in region.lo[0]..region.hi[0] {
                        let wx = (x as i64 - win.lo[0]) as usize;
                        let wy = (y as i64 - win.lo[1]) as usize;
                        for z in region.lo[2]..region.hi[2] {
                            let wz = (z as i64 - win.lo[2]) as usize;
                            let d = d2[(wy * nx + wx) * nz + wz];
                            let phi = if d == 0.0 { OCCUPIED } else { d.sqrt().min(tau) };
                            store(&mut self.values, x, y, z, phi);
                        }
                    }
                }
            }
        }
        for y in region.lo[1]..region.hi[1] {
            for x in region.lo[0]..region.hi[0] {
                let col = (y * g.cells_x + x) * g.cells_z;
                let pre = (y * g.cells_x + x) * (g.cells_z + 1);
                let mut acc = self.prefix[pre + region.lo[2]];
                for z in region.lo[2]..g.cells_z {
                    acc += self.values[col + z];
                    self.prefix[pre + z + 1] = acc;
                }
            }
        }
        changed
    }

    /// Brings the field from `old` to `new`, recomputing only cells within the truncation
    /// distance of voxels whose occupancy changed.
    pub fn local_update(&mut self, old: &Heightmap, new: &Heightmap) -> Result<FieldUpdate> {
        new.check_grid(&self.grid)?;
        old.check_grid(&self.grid)?;
        let Some(rect) = old.changed_rect(new) else {
            return Ok(FieldUpdate::NONE);
        };
        let (mut zlo, mut zhi) = (u32::MAX, 0u32);
        for y in rect.y0..rect.y1 {
            for x in rect.x0..rect.x1 {
                let (a, b) = (old.get(x, y), new.get(x, y));
                if a != b {
                    zlo = zlo.min(a.min(b));
                    zhi = zhi.max(a.max(b));
                }
            }
        }
        let g = self.grid;
        let m = self.params.margins(&g);
        let region = CellBox {
            lo: [
                rect.x0.saturating_sub(m[0]),
                rect.y0.saturating_sub(m[1]),
                (zlo as usize).saturating_sub(m[2]),
            ],
            hi: [
                (rect.x1 + m[0]).min(g.cells_x),
                (rect.y1 + m[1]).min(g.cells_y),
                (zhi as usize + m[2]).min(g.cells_z),
            ],
        };
        let changed = self.recompute(new, region);
        Ok(FieldUpdate {
            recomputed: Some(region),
            changed,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &TsdfParams {
        &self.params
    }

    pub fn tau(&self) -> f64 {
        self.params.tau
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[(y * self.grid.cells_x + x) * self.grid.cells_z + z]
    }

    /// Sum of the values in column `(x, y)` over `z` in `[lo, hi)`.
    #[inline]
    pub fn column_sum(&self, x: usize, y: usize, lo: usize, hi: usize) -> f64 {
        let pre = (y * self.grid.cells_x + x) * (self.grid.cells_z + 1);
        self.prefix[pre + hi] - self.prefix[pre + lo]
    }

    fn check_footprint(&self, obj: &OrientedObject, x: usize, y: usize, z: usize) -> Result<()> {
        let g = &self.grid;
        if x + obj.width() > g.cells_x || y + obj.depth() > g.cells_y {
            return Err(Error::OutOfBounds {
                x,
                y,
                w: obj.width(),
                d: obj.depth(),
            });
        }
        if z + obj.height() > g.cells_z {
            return Err(Error::Internal(format!(
                "object of height {} at z = {z} leaves the container",
                obj.height()
            )));
        }
        Ok(())
    }

    /// Sum of the field over the cells the object occupies at `(x, y, z)`, and their count.
    ///
    /// Sampling an occupied cell means the placement collides, which is a bug upstream.
    pub fn sample_sum(&self, obj: &OrientedObject, x: usize, y: usize, z: usize) -> Result<(f64, u32)> {
        self.check_footprint(obj, x, y, z)?;
        let mut sum = 0.0;
        let mut count = 0;
        for h in 0..obj.height() {
            for d in 0..obj.depth() {
                for w in 0..obj.width() {
                    if obj.occupied(w, d, h) {
                        let phi = self.get(x + w, y + d, z + h);
                        if phi < 0.0 {
                            return Err(Error::Internal(format!(
                                "sampled occupied cell ({}, {}, {})",
                                x + w,
                                y + d,
                                z + h
                            )));
                        }
                        sum += phi;
                        count += 1;
                    }
                }
            }
        }
        Ok((sum, count))
    }

    /// Same quantity as [`Self::sample_sum`], evaluated per column run with the prefix sums.
    /// The placement must be collision free.
    pub fn run_sum(&self, obj: &OrientedObject, x: usize, y: usize, z: usize) -> f64 {
        let mut sum = 0.0;
        for col in obj.columns() {
            for &(lo, hi) in obj.runs(col) {
                sum += self.column_sum(x + col.i, y + col.j, z + lo as usize, z + hi as usize);
            }
        }
        sum
    }

    /// One text matrix per z-slice (rows are `y`, columns `x`), values with three decimals.
    pub fn dump_slices(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        for z in 0..g.cells_z {
            out.push_str(&format!("z = {z}\n"));
            for y in 0..g.cells_y {
                let row: Vec<String> = (0..g.cells_x).map(|x| format!("{:.3}", self.get(x, y, z))).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }
}
