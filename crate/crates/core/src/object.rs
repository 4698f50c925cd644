//! Voxelized objects at the four in-plane orientations.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::shape::ShapeSpec;

/// Number of in-plane orientations searched: every quarter of a half turn.
pub const ORIENTATIONS: usize = 4;

/// Largest tolerated relative spread of voxel volume across the orientations of one object.
pub const VOLUME_VARIATION_LIMIT: f64 = 0.10;

/// Occupied vertical run `[lo, hi)` inside one object column.
pub type Run = (u32, u32);

/// A non-empty column of an oriented object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub i: usize,
    pub j: usize,
    /// Lowest occupied z-index.
    pub bottom: u32,
    /// Highest occupied z-index plus one.
    pub top: u32,
    runs: (usize, usize),
}

/// One orientation of an object: its occupancy grid and the quantities derived from it.
#[derive(Debug, Clone)]
pub struct OrientedObject {
    width: usize,
    depth: usize,
    height: usize,
    occupancy: Vec<bool>,
    bottom_up: Vec<u32>,
    top_down: Vec<u32>,
    columns: Vec<Column>,
    runs: Vec<Run>,
    volume: u32,
    /// Sums of `2i + 1`, `2j + 1`, `2k + 1` over occupied cells; the mass center is
    /// `center_num / (2 * volume)`.
    center_num: [u64; 3],
    /// Per column and side direction, sorted z-indices of cells whose horizontal neighbour in
    /// that direction is not part of the object.
    exposed: Vec<Vec<u32>>,
}

/// Neighbour offsets for the side faces: -x, +x, -y, +y.
pub const SIDE_DIRS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

impl OrientedObject {
    /// Builds an oriented object from an occupancy grid indexed `x` fastest, then `y`, then `z`.
    pub fn from_occupancy(dims: [usize; 3], occupancy: Vec<bool>) -> Result<Self> {
        let [w, d, h] = dims;
        if w == 0 || d == 0 || h == 0 {
            return Err(Error::MalformedDocument(format!("zero dimension in {dims:?}")));
        }
        if occupancy.len() != w * d * h {
            return Err(Error::MalformedDocument(format!(
                "occupancy has {} cells, dims {:?} need {}",
                occupancy.len(),
                dims,
                w * d * h
            )));
        }
        let idx = |x: usize, y: usize, z: usize| (z * d + y) * w + x;
        let sentinel = h as u32;
        let mut bottom_up = vec![sentinel; w * d];
        let mut top_down = vec![sentinel; w * d];
        let mut columns = Vec::new();
        let mut runs = Vec::new();
        let mut exposed = Vec::new();
        let mut volume = 0u32;
        let mut center_num = [0u64; 3];

        for j in 0..d {
            for i in 0..w {
                let start = runs.len();
                let mut lo: Option<usize> = None;
                let mut first = None;
                let mut last = 0;
                for k in 0..h {
                    let occ = occupancy[idx(i, j, k)];
                    if occ {
                        volume += 1;
                        center_num[0] += 2 * i as u64 + 1;
                        center_num[1] += 2 * j as u64 + 1;
                        center_num[2] += 2 * k as u64 + 1;
                        first.get_or_insert(k);
                        last = k;
                        if lo.is_none() {
                            lo = Some(k);
                        }
                    } else if let Some(l) = lo.take() {
                        runs.push((l as u32, k as u32));
                    }
                }
                if let Some(l) = lo {
                    runs.push((l as u32, h as u32));
                }
                let Some(first) = first else { continue };
                bottom_up[j * w + i] = first as u32;
                top_down[j * w + i] = (h - (last + 1)) as u32;
                columns.push(Column {
                    i,
                    j,
                    bottom: first as u32,
                    top: last as u32 + 1,
                    runs: (start, runs.len()),
                });
                for (dx, dy) in SIDE_DIRS {
                    let (ni, nj) = (i as i64 + dx, j as i64 + dy);
                    let inside = ni >= 0 && nj >= 0 && (ni as usize) < w && (nj as usize) < d;
                    let list: Vec<u32> = (first..=last)
                        .filter(|&k| {
                            occupancy[idx(i, j, k)] && !(inside && occupancy[idx(ni as usize, nj as usize, k)])
                        })
                        .map(|k| k as u32)
                        .collect();
                    exposed.push(list);
                }
            }
        }
        if volume == 0 {
            return Err(Error::EmptyObject(String::new()));
        }
        Ok(Self {
            width: w,
            depth: d,
            height: h,
            occupancy,
            bottom_up,
            top_down,
            columns,
            runs,
            volume,
            center_num,
            exposed,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.width, self.depth, self.height]
    }

    /// Occupied voxel count.
    pub fn volume(&self) -> u32 {
        self.volume
    }

    /// Bounding-box cell count `W * D * H`.
    pub fn bbox_volume(&self) -> usize {
        self.width * self.depth * self.height
    }

    #[inline]
    pub fn occupied(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupancy[(z * self.depth + y) * self.width + x]
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    /// Bottom-up heightmap value: lowest occupied z-index, or `H` for an empty column.
    #[inline]
    pub fn bottom_up(&self, i: usize, j: usize) -> u32 {
        self.bottom_up[j * self.width + i]
    }

    /// Top-down heightmap value: distance from the bounding-box top to the highest occupied
    /// cell, or `H` for an empty column.
    #[inline]
    pub fn top_down(&self, i: usize, j: usize) -> u32 {
        self.top_down[j * self.width + i]
    }

    pub fn bottom_up_map(&self) -> &[u32] {
        &self.bottom_up
    }

    pub fn top_down_map(&self) -> &[u32] {
        &self.top_down
    }

    /// Non-empty columns, `i` fastest then `j`.
    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn runs(&self, column: &Column) -> &[Run] {
        &self.runs[column.runs.0..column.runs.1]
    }

    /// Sorted z-indices of the column's cells exposed toward side direction `dir`
    /// (index into [`SIDE_DIRS`]). `column` is an index into [`Self::columns`].
    pub fn exposed(&self, column: usize, dir: usize) -> &[u32] {
        &self.exposed[column * 4 + dir]
    }

    /// Bounds `[lo, hi)` of the occupied cells.
    pub fn occupied_bounds(&self) -> ([usize; 3], [usize; 3]) {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0; 3];
        for c in &self.columns {
            lo[0] = lo[0].min(c.i);
            hi[0] = hi[0].max(c.i + 1);
            lo[1] = lo[1].min(c.j);
            hi[1] = hi[1].max(c.j + 1);
            lo[2] = lo[2].min(c.bottom as usize);
            hi[2] = hi[2].max(c.top as usize);
        }
        (lo, hi)
    }

    /// Mass center in cell coordinates (uniform density, cell centers at `i + 0.5`).
    pub fn mass_center(&self) -> [f64; 3] {
        let v = 2.0 * self.volume as f64;
        [
            self.center_num[0] as f64 / v,
            self.center_num[1] as f64 / v,
            self.center_num[2] as f64 / v,
        ]
    }

    /// Numerators of the mass center over the common denominator `2 * volume`.
    pub fn mass_center_numerators(&self) -> [u64; 3] {
        self.center_num
    }

    /// Copy restricted to the bounding box of the occupied cells.
    pub fn trimmed(&self) -> OrientedObject {
        let ([x0, y0, z0], [x1, y1, z1]) = self.occupied_bounds();
        if (x0, y0, z0) == (0, 0, 0) && (x1, y1, z1) == (self.width, self.depth, self.height) {
            return self.clone();
        }
        let (w, d, h) = (x1 - x0, y1 - y0, z1 - z0);
        let mut occ = vec![false; w * d * h];
        for z in 0..h {
            for y in 0..d {
                for x in 0..w {
                    occ[(z * d + y) * w + x] = self.occupied(x + x0, y + y0, z + z0);
                }
            }
        }
        OrientedObject::from_occupancy([w, d, h], occ).expect("trimmed object keeps its voxels")
    }
}

/// A packable object: name plus its occupancy at each searched orientation.
#[derive(Debug, Clone)]
pub struct ObjectModel {
    name: String,
    shape: Option<ShapeSpec>,
    orientations: Vec<OrientedObject>,
}

/// Rotation of a point by `-k * pi/4`, with the quarter turns applied exactly.
fn rotate_back(k: usize, x: f64, y: f64) -> (f64, f64) {
    let (mut x, mut y) = (x, y);
    if k >= 2 {
        (x, y) = (y, -x);
    }
    if k % 2 == 1 {
        let c = FRAC_1_SQRT_2;
        (x, y) = (c * x + c * y, -c * x + c * y);
    }
    (x, y)
}

/// Rotation of a point by `+k * pi/4`; inverse of [`rotate_back`].
fn rotate_forward(k: usize, x: f64, y: f64) -> (f64, f64) {
    let (mut x, mut y) = (x, y);
    if k % 2 == 1 {
        let c = FRAC_1_SQRT_2;
        (x, y) = (c * x - c * y, c * x + c * y);
    }
    if k >= 2 {
        (x, y) = (-y, x);
    }
    (x, y)
}

fn orientation_trig(k: usize) -> (f64, f64) {
    match k {
        0 => (1.0, 0.0),
        1 => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        2 => (0.0, 1.0),
        _ => (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    }
}

fn cells_for(extent: f64) -> usize {
    ((extent - 1e-9).ceil() as usize).max(1)
}

impl ObjectModel {
    pub fn new(name: impl Into<String>, shape: Option<ShapeSpec>, orientations: Vec<OrientedObject>) -> Self {
        assert_eq!(orientations.len(), ORIENTATIONS);
        Self {
            name: name.into(),
            shape,
            orientations,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Procedural description this object was rasterized from, if any.
    pub fn shape(&self) -> Option<&ShapeSpec> {
        self.shape.as_ref()
    }

    pub fn orientation(&self, r: usize) -> &OrientedObject {
        &self.orientations[r]
    }

    pub fn orientations(&self) -> &[OrientedObject] {
        &self.orientations
    }

    /// Relative spread `(max - min) / max` of the voxel volume across orientations.
    pub fn volume_variation(&self) -> f64 {
        let vols = self.orientations.iter().map(|o| o.volume() as f64);
        let max = vols.clone().fold(f64::MIN, f64::max);
        let min = vols.fold(f64::MAX, f64::min);
        (max - min) / max
    }

    /// Whether resampling changed the volume by more than [`VOLUME_VARIATION_LIMIT`].
    pub fn volume_flagged(&self) -> bool {
        self.volume_variation() > VOLUME_VARIATION_LIMIT
    }

    /// Bounding-box cell count at the reference orientation.
    pub fn reference_bbox_volume(&self) -> usize {
        self.orientations[0].bbox_volume()
    }

    pub fn fits_somewhere(&self, grid: &GridSpec) -> bool {
        self.orientations
            .iter()
            .any(|o| o.width() <= grid.cells_x && o.depth() <= grid.cells_y && o.height() <= grid.cells_z)
    }

    /// Builds an object from a voxel grid at the reference orientation. The other orientations
    /// are resampled by nearest voxel center (plus a forward splat of every source voxel) and
    /// trimmed to their occupied bounds.
    pub fn from_voxels(name: impl Into<String>, dims: [usize; 3], occupancy: Vec<bool>) -> Result<Self> {
        let name = name.into();
        let base = OrientedObject::from_occupancy(dims, occupancy).map_err(|e| match e {
            Error::EmptyObject(_) => Error::EmptyObject(name.clone()),
            other => other,
        })?;
        let [w, d, h] = dims;
        let mut orientations = vec![base.clone()];
        for k in 1..ORIENTATIONS {
            let (c, s) = orientation_trig(k);
            let (hw, hd) = (w as f64 / 2.0, d as f64 / 2.0);
            let tw = cells_for(2.0 * (hw * c.abs() + hd * s.abs()));
            let td = cells_for(2.0 * (hw * s.abs() + hd * c.abs()));
            let mut occ = vec![false; tw * td * h];
            for j in 0..td {
                for i in 0..tw {
                    let px = i as f64 + 0.5 - tw as f64 / 2.0;
                    let py = j as f64 + 0.5 - td as f64 / 2.0;
                    let (qx, qy) = rotate_back(k, px, py);
                    let (sx, sy) = ((qx + hw).floor(), (qy + hd).floor());
                    if sx < 0.0 || sy < 0.0 || sx >= w as f64 || sy >= d as f64 {
                        continue;
                    }
                    let (sx, sy) = (sx as usize, sy as usize);
                    for z in 0..h {
                        occ[(z * td + j) * tw + i] = base.occupied(sx, sy, z);
                    }
                }
            }
            // forward splat so no source voxel is lost on small objects
            for sy in 0..d {
                for sx in 0..w {
                    let (qx, qy) = rotate_forward(k, sx as f64 + 0.5 - hw, sy as f64 + 0.5 - hd);
                    let i = ((qx + tw as f64 / 2.0).floor() as i64).clamp(0, tw as i64 - 1) as usize;
                    let j = ((qy + td as f64 / 2.0).floor() as i64).clamp(0, td as i64 - 1) as usize;
                    for z in 0..h {
                        if base.occupied(sx, sy, z) {
                            occ[(z * td + j) * tw + i] = true;
                        }
                    }
                }
            }
            let oriented = OrientedObject::from_occupancy([tw, td, h], occ)
                .map_err(|_| Error::EmptyObject(name.clone()))?
                .trimmed();
            orientations.push(oriented);
        }
        Ok(Self::new(name, None, orientations))
    }
}

/// Rasterizes a procedural shape at all four orientations by sampling the analytic inside test
/// at voxel centers.
pub fn rasterize_shape(name: impl Into<String>, shape: &ShapeSpec, grid: &GridSpec) -> Result<ObjectModel> {
    let name = name.into();
    shape.validate().map_err(Error::InvalidConfig)?;
    let cells = shape.in_cells(grid.res_xy, grid.res_z);
    let h = cells_for(cells.height());
    let mut orientations = Vec::with_capacity(ORIENTATIONS);
    for k in 0..ORIENTATIONS {
        let (c, s) = orientation_trig(k);
        let (hx, hy) = cells.rotated_half_extents(c, s);
        let (w, d) = (cells_for(2.0 * hx), cells_for(2.0 * hy));
        let mut occ = vec![false; w * d * h];
        for j in 0..d {
            for i in 0..w {
                let px = i as f64 + 0.5 - w as f64 / 2.0;
                let py = j as f64 + 0.5 - d as f64 / 2.0;
                let (qx, qy) = rotate_back(k, px, py);
                for z in 0..h {
                    if cells.contains(qx, qy, z as f64 + 0.5) {
                        occ[(z * d + j) * w + i] = true;
                    }
                }
            }
        }
        let oriented = OrientedObject::from_occupancy([w, d, h], occ)
            .map_err(|_| Error::EmptyObject(name.clone()))?
            .trimmed();
        orientations.push(oriented);
    }
    let model = ObjectModel::new(name.clone(), Some(shape.clone()), orientations);
    if !model.fits_somewhere(grid) {
        return Err(Error::ShapeTooLarge { name });
    }
    Ok(model)
}
