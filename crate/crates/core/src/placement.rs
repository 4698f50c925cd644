//! Feasible placement search: drop height, containment and support-polygon stability.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ColumnRect, GridSpec, Heightmap};
use crate::hull::{convex_hull_into, strictly_inside, Point};
use crate::object::{ObjectModel, OrientedObject};

/// Object pose: footprint origin `(x, y)`, resting height `z` (all in cells) and orientation
/// index `r` (multiples of pi/4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement {
    pub x: usize,
    pub y: usize,
    pub z: u32,
    pub r: usize,
}

impl Placement {
    pub fn new(x: usize, y: usize, z: u32, r: usize) -> Self {
        Self { x, y, z, r }
    }

    pub fn footprint(&self, obj: &OrientedObject) -> ColumnRect {
        ColumnRect::new(self.x, self.y, self.x + obj.width(), self.y + obj.depth())
    }
}

#[inline]
fn footprint_fits(hm: &Heightmap, obj: &OrientedObject, x: usize, y: usize) -> bool {
    x + obj.width() <= hm.width() && y + obj.depth() <= hm.depth()
}

/// Deepest collision-free height: `max_ij (H_c[x + i, y + j] - Hb[i, j])`, clamped at 0.
///
/// Empty object columns carry `Hb = H`, so terrain may not rise through them above the
/// bounding-box top.
pub fn drop_height(hm: &Heightmap, obj: &OrientedObject, x: usize, y: usize) -> Result<u32> {
    if !footprint_fits(hm, obj, x, y) {
        return Err(Error::OutOfBounds {
            x,
            y,
            w: obj.width(),
            d: obj.depth(),
        });
    }
    Ok(drop_height_unchecked(hm, obj, x, y))
}

#[inline]
fn drop_height_unchecked(hm: &Heightmap, obj: &OrientedObject, x: usize, y: usize) -> u32 {
    let mut z = 0i64;
    for j in 0..obj.depth() {
        for i in 0..obj.width() {
            let v = hm.get(x + i, y + j) as i64 - obj.bottom_up(i, j) as i64;
            z = z.max(v);
        }
    }
    z as u32
}

/// Support-polygon test for an object resting at `p`.
///
/// Supporting columns are the non-empty object columns whose lowest cell sits directly on the
/// terrain. Each one contributes its full cell square, so the support polygon is the hull of the
/// supporting cell centers grown by half a cell. The projected mass center must lie strictly
/// inside it. Arithmetic is exact: coordinates are scaled by `2 * volume`.
pub fn stability_test(hm: &Heightmap, obj: &OrientedObject, p: Placement) -> Result<bool> {
    let z = drop_height(hm, obj, p.x, p.y)?;
    if z != p.z {
        return Err(Error::Internal(format!(
            "stability test at z = {} but the object rests at z = {z}",
            p.z
        )));
    }
    Ok(is_stable(hm, obj, p.x, p.y, z))
}

thread_local! {
    static SCRATCH: RefCell<(Vec<Point>, Vec<Point>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

fn is_stable(hm: &Heightmap, obj: &OrientedObject, x: usize, y: usize, z: u32) -> bool {
    stable_within(hm, obj, x, y, z, (0, obj.width()), (0, obj.depth()))
}

/// Stability test considering only supports with `i` in `is` and `j` in `js` (half-open).
fn stable_within(
    hm: &Heightmap,
    obj: &OrientedObject,
    x: usize,
    y: usize,
    z: u32,
    is: (usize, usize),
    js: (usize, usize),
) -> bool {
    let scale = 2 * obj.volume() as i64;
    let empty = obj.height() as u32;
    SCRATCH.with_borrow_mut(|(pts, hull)| {
        pts.clear();
        for j in js.0..js.1 {
            let mut lo = usize::MAX;
            let mut hi = 0;
            for i in is.0..is.1 {
                let b = obj.bottom_up(i, j);
                if b != empty && hm.get(x + i, y + j) as i64 - b as i64 == z as i64 {
                    lo = lo.min(i);
                    hi = i;
                }
            }
            if lo == usize::MAX {
                continue;
            }
            let (j0, j1) = (j as i64 * scale, (j as i64 + 1) * scale);
            let (i0, i1) = (lo as i64 * scale, (hi as i64 + 1) * scale);
            pts.extend_from_slice(&[[i0, j0], [i0, j1], [i1, j0], [i1, j1]]);
        }
        if pts.is_empty() {
            return false;
        }
        convex_hull_into(pts, hull);
        let [mx, my, _] = obj.mass_center_numerators();
        strictly_inside(hull, [mx as i64, my as i64])
    })
}

/// Evaluation of one `(x, y, r)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub z: u32,
    pub feasible: bool,
}

fn evaluate_slot(hm: &Heightmap, obj: &OrientedObject, cells_z: usize, x: usize, y: usize) -> Slot {
    let z = drop_height_unchecked(hm, obj, x, y);
    let fits = z as usize + obj.height() <= cells_z;
    Slot {
        z,
        feasible: fits && is_stable(hm, obj, x, y, z),
    }
}

#[allow(clippy::too_many_arguments)]
fn refresh_rising(
    slot: &mut Slot,
    old: &Heightmap,
    new: &Heightmap,
    obj: &OrientedObject,
    cells_z: usize,
    x: usize,
    y: usize,
    changed: &ColumnRect,
) {
    let (i0, i1) = (changed.x0.max(x), changed.x1.min(x + obj.width()));
    let (j0, j1) = (changed.y0.max(y), changed.y1.min(y + obj.depth()));
    let z = slot.z as i64;
    let mut top = z;
    let mut new_support = false;
    let empty = obj.height() as u32;
    for cy in j0..j1 {
        for cx in i0..i1 {
            let b = obj.bottom_up(cx - x, cy - y);
            let h = new.get(cx, cy) as i64 - b as i64;
            top = top.max(h);
            if h == z && b != empty && old.get(cx, cy) as i64 - b as i64 != z {
                new_support = true;
            }
        }
    }
    if top != z {
        // every support sits at the new height, which only the overlap reaches
        let fits = top as usize + obj.height() <= cells_z;
        *slot = Slot {
            z: top as u32,
            feasible: fits && stable_within(new, obj, x, y, top as u32, (i0 - x, i1 - x), (j0 - y, j1 - y)),
        };
    } else if !slot.feasible && new_support && slot.z as usize + obj.height() <= cells_z {
        slot.feasible = is_stable(new, obj, x, y, slot.z);
    }
}

/// All `(x, y)` slots of one orientation, `x` fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotLayer {
    pub nx: usize,
    pub ny: usize,
    pub width: usize,
    pub depth: usize,
    pub slots: Vec<Slot>,
}

impl SlotLayer {
    /// Slot indices whose footprint intersects `rect`.
    pub fn indices_touching(&self, rect: &ColumnRect) -> impl Iterator<Item = usize> + '_ {
        let xs = rect.x0.saturating_sub(self.width - 1)..rect.x1.min(self.nx);
        let ys = rect.y0.saturating_sub(self.depth - 1)..rect.y1.min(self.ny);
        let nx = self.nx;
        ys.flat_map(move |y| xs.clone().map(move |x| y * nx + x))
    }
}

/// Placements passing containment and stability for one object, with every evaluated slot
/// retained so it can be refreshed after the container changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleSet {
    layers: Vec<SlotLayer>,
}

impl FeasibleSet {
    /// Evaluates every in-bounds `(x, y, r)`.
    pub fn enumerate(hm: &Heightmap, model: &ObjectModel, grid: &GridSpec) -> Self {
        let layers = model
            .orientations()
            .iter()
            .map(|obj| {
                let (w, d) = (obj.width(), obj.depth());
                let fits = w <= grid.cells_x && d <= grid.cells_y && obj.height() <= grid.cells_z;
                let (nx, ny) = if fits {
                    (grid.cells_x - w + 1, grid.cells_y - d + 1)
                } else {
                    (0, 0)
                };
                let mut slots = Vec::with_capacity(nx * ny);
                for y in 0..ny {
                    for x in 0..nx {
                        slots.push(evaluate_slot(hm, obj, grid.cells_z, x, y));
                    }
                }
                SlotLayer {
                    nx,
                    ny,
                    width: w,
                    depth: d,
                    slots,
                }
            })
            .collect();
        Self { layers }
    }

    /// Brings the set from `old` to `new`, where the two heightmaps differ only inside
    /// `changed`. Only slots whose footprint intersects `changed` can differ; they are returned
    /// as `(r, index)`.
    ///
    /// When no height inside `changed` decreased, a slot is settled from the overlap alone: the
    /// drop height can only grow, and at an unchanged drop height the support set can only grow,
    /// so a stable slot stays stable.
    pub fn refresh(
        &mut self,
        old: &Heightmap,
        new: &Heightmap,
        model: &ObjectModel,
        grid: &GridSpec,
        changed: &ColumnRect,
    ) -> Vec<(usize, usize)> {
        let rising = (changed.y0..changed.y1).all(|y| (changed.x0..changed.x1).all(|x| new.get(x, y) >= old.get(x, y)));
        let mut touched = Vec::new();
        for (r, layer) in self.layers.iter_mut().enumerate() {
            if layer.slots.is_empty() {
                continue;
            }
            let obj = model.orientation(r);
            let idx: Vec<usize> = layer.indices_touching(changed).collect();
            for i in idx {
                let (x, y) = (i % layer.nx, i / layer.nx);
                let slot = &mut layer.slots[i];
                if rising {
                    refresh_rising(slot, old, new, obj, grid.cells_z, x, y, changed);
                } else {
                    *slot = evaluate_slot(new, obj, grid.cells_z, x, y);
                }
                touched.push((r, i));
            }
        }
        touched
    }

    pub fn layers(&self) -> &[SlotLayer] {
        &self.layers
    }

    pub fn placement(&self, r: usize, index: usize) -> Placement {
        let layer = &self.layers[r];
        Placement::new(index % layer.nx, index / layer.nx, layer.slots[index].z, r)
    }

    /// Feasible placements ordered by orientation, then `y`, then `x`.
    pub fn placements(&self) -> impl Iterator<Item = Placement> + '_ {
        self.layers.iter().enumerate().flat_map(|(r, layer)| {
            layer
                .slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.feasible)
                .map(move |(i, s)| Placement {
                    x: i % layer.nx,
                    y: i / layer.nx,
                    z: s.z,
                    r,
                })
        })
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.slots.iter().filter(|s| s.feasible).count())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(|l| l.slots.iter().all(|s| !s.feasible))
    }
}

/// Raises the heightmap under the placed object: `H'[x + i, y + j] = max(H, z + H_o - T[i, j])`
/// for every non-empty object column.
pub fn apply_placement(hm: &Heightmap, obj: &OrientedObject, p: Placement, cells_z: usize) -> Result<Heightmap> {
    let mut next = hm.clone();
    apply_placement_in_place(&mut next, obj, p, cells_z)?;
    Ok(next)
}

pub fn apply_placement_in_place(hm: &mut Heightmap, obj: &OrientedObject, p: Placement, cells_z: usize) -> Result<()> {
    if !footprint_fits(hm, obj, p.x, p.y) {
        return Err(Error::OutOfBounds {
            x: p.x,
            y: p.y,
            w: obj.width(),
            d: obj.depth(),
        });
    }
    for col in obj.columns() {
        let (x, y) = (p.x + col.i, p.y + col.j);
        let top = p.z + col.top;
        if top as usize > cells_z {
            return Err(Error::ExceedsContainer {
                x,
                y,
                height: top,
                limit: cells_z,
            });
        }
        if top > hm.get(x, y) {
            hm.set(x, y, top);
        }
    }
    Ok(())
}
