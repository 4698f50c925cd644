//! Container discretization and heightmaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of the container volume.
///
/// Horizontal cells are `res_xy` meters wide, vertical cells `res_z` meters tall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells_x: usize,
    pub cells_y: usize,
    pub cells_z: usize,
    pub res_xy: f64,
    pub res_z: f64,
}

impl Default for GridSpec {
    /// 32 cm x 32 cm x 30 cm at 1 cm horizontal and 2 mm vertical resolution.
    fn default() -> Self {
        Self {
            cells_x: 32,
            cells_y: 32,
            cells_z: 150,
            res_xy: 0.01,
            res_z: 0.002,
        }
    }
}

impl GridSpec {
    pub fn new(cells_x: usize, cells_y: usize, cells_z: usize, res_xy: f64, res_z: f64) -> Result<Self> {
        let grid = Self {
            cells_x,
            cells_y,
            cells_z,
            res_xy,
            res_z,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with unit resolution on every axis, so meters and cells coincide.
    pub fn unit(cells_x: usize, cells_y: usize, cells_z: usize) -> Self {
        Self {
            cells_x,
            cells_y,
            cells_z,
            res_xy: 1.0,
            res_z: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells_x == 0 || self.cells_y == 0 || self.cells_z == 0 {
            return Err(Error::InvalidGrid(format!(
                "cell counts must be at least 1, got {}x{}x{}",
                self.cells_x, self.cells_y, self.cells_z
            )));
        }
        if !(self.res_xy > 0.0 && self.res_xy.is_finite() && self.res_z > 0.0 && self.res_z.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "resolutions must be positive, got {} / {}",
                self.res_xy, self.res_z
            )));
        }
        if self.cells_z > u32::MAX as usize / 4 {
            return Err(Error::InvalidGrid("cells_z too large".into()));
        }
        Ok(())
    }

    pub fn columns(&self) -> usize {
        self.cells_x * self.cells_y
    }

    pub fn cell_count(&self) -> usize {
        self.cells_x * self.cells_y * self.cells_z
    }

    /// Volume of one voxel in cubic centimeters.
    pub fn voxel_volume_cm3(&self) -> f64 {
        (self.res_xy * 100.0) * (self.res_xy * 100.0) * (self.res_z * 100.0)
    }

    pub fn empty_heightmap(&self) -> Heightmap {
        Heightmap::new(self.cells_x, self.cells_y)
    }
}

/// Half-open rectangle of columns `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColumnRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl ColumnRect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }

    pub fn intersects(&self, other: &ColumnRect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    /// Grows the rectangle by `margin` on every side, clamped to `[0, max_x) x [0, max_y)`.
    pub fn dilate(&self, margin: usize, max_x: usize, max_y: usize) -> ColumnRect {
        ColumnRect {
            x0: self.x0.saturating_sub(margin),
            y0: self.y0.saturating_sub(margin),
            x1: (self.x1 + margin).min(max_x),
            y1: (self.y1 + margin).min(max_y),
        }
    }

    pub fn union(&self, other: &ColumnRect) -> ColumnRect {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        ColumnRect {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }
}

/// Top-down heightmap: for every column, the number of occupied cells counted from the floor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Heightmap {
    width: usize,
    depth: usize,
    values: Vec<u32>,
}

impl Heightmap {
    pub fn new(width: usize, depth: usize) -> Self {
        Self {
            width,
            depth,
            values: vec![0; width * depth],
        }
    }

    /// Builds a heightmap from row-major values (`x` fastest).
    pub fn from_values(width: usize, depth: usize, values: Vec<u32>) -> Result<Self> {
        if values.len() != width * depth {
            return Err(Error::InvalidGrid(format!(
                "heightmap needs {} values, got {}",
                width * depth,
                values.len()
            )));
        }
        Ok(Self { width, depth, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u32) {
        self.values[y * self.width + x] = value;
    }

    pub fn max_height(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Sum of all column heights (occupied cell count under the surface).
    pub fn total(&self) -> u64 {
        self.values.iter().map(|&v| v as u64).sum()
    }

    pub fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if self.width != grid.cells_x || self.depth != grid.cells_y {
            return Err(Error::DimensionMismatch {
                got_w: self.width,
                got_d: self.depth,
                want_w: grid.cells_x,
                want_d: grid.cells_y,
            });
        }
        if let Some(&v) = self.values.iter().find(|&&v| v as usize > grid.cells_z) {
            return Err(Error::InvalidGrid(format!(
                "height {v} exceeds container height {}",
                grid.cells_z
            )));
        }
        Ok(())
    }

    /// Bounding rectangle of the columns whose height differs between `self` and `other`.
    pub fn changed_rect(&self, other: &Heightmap) -> Option<ColumnRect> {
        debug_assert_eq!(self.width, other.width);
        debug_assert_eq!(self.depth, other.depth);
        let mut rect: Option<ColumnRect> = None;
        for y in 0..self.depth {
            for x in 0..self.width {
                if self.get(x, y) != other.get(x, y) {
                    let r = rect.get_or_insert(ColumnRect::new(x, y, x + 1, y + 1));
                    r.x0 = r.x0.min(x);
                    r.y0 = r.y0.min(y);
                    r.x1 = r.x1.max(x + 1);
                    r.y1 = r.y1.max(y + 1);
                }
            }
        }
        rect
    }

    /// Text matrix, one row per `y`, columns separated by spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 4);
        for y in 0..self.depth {
            let row: Vec<String> = (0..self.width).map(|x| self.get(x, y).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Occupancy implied by a heightmap: cell `(x, y, h)` is occupied iff `h < H[x, y]`.
///
/// The view also reports a shell of occupied cells one layer outside the floor and the four
/// walls. The open top is never occupied.
#[derive(Debug, Clone, Copy)]
pub struct OccupancyView<'a> {
    heightmap: &'a Heightmap,
    cells_z: usize,
}

impl<'a> OccupancyView<'a> {
    pub fn new(heightmap: &'a Heightmap, cells_z: usize) -> Self {
        Self { heightmap, cells_z }
    }

    /// Occupancy for any integer coordinate, including the boundary shell.
    #[inline]
    pub fn is_occupied(&self, x: i64, y: i64, z: i64) -> bool {
        let w = self.heightmap.width() as i64;
        let d = self.heightmap.depth() as i64;
        if x < 0 || y < 0 || x >= w || y >= d || z < 0 {
            return z < self.cells_z as i64;
        }
        if z >= self.cells_z as i64 {
            return false;
        }
        z < self.heightmap.get(x as usize, y as usize) as i64
    }
}
