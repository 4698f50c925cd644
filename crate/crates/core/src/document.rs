//! Object-definition documents: JSON with a run-length-encoded occupancy string.
//!
//! ```json
//! { "name": "mug", "dims": [4, 2, 3], "occupancy": "20T4F", "res_xy": 0.01, "res_z": 0.002 }
//! ```
//!
//! Occupancy is listed `x` fastest, then `y`, then `z`, as runs of `<count>T` or `<count>F`.
//! Derived fields are always recomputed from the occupancy on load.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::object::ObjectModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDocument {
    pub name: String,
    pub dims: [usize; 3],
    pub occupancy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub res_xy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub res_z: Option<f64>,
}

pub fn encode_rle(cells: &[bool]) -> String {
    let mut out = String::new();
    let mut iter = cells.iter().peekable();
    while let Some(&v) = iter.next() {
        let mut n = 1usize;
        while iter.peek() == Some(&&v) {
            iter.next();
            n += 1;
        }
        out.push_str(&n.to_string());
        out.push(if v { 'T' } else { 'F' });
    }
    out
}

pub fn decode_rle(text: &str) -> Result<Vec<bool>> {
    let mut cells = Vec::new();
    let mut count = String::new();
    for ch in text.chars().filter(|c| !c.is_whitespace()) {
        match ch {
            '0'..='9' => count.push(ch),
            'T' | 'F' => {
                if count.is_empty() {
                    return Err(Error::MalformedDocument(format!("run `{ch}` without a count")));
                }
                let n: usize = count
                    .parse()
                    .map_err(|_| Error::MalformedDocument(format!("bad run length `{count}`")))?;
                if n == 0 {
                    return Err(Error::MalformedDocument("zero-length run".into()));
                }
                cells.extend(std::iter::repeat_n(ch == 'T', n));
                count.clear();
            }
            other => {
                return Err(Error::MalformedDocument(format!("unexpected character `{other}`")));
            }
        }
    }
    if !count.is_empty() {
        return Err(Error::MalformedDocument("trailing run length without a value".into()));
    }
    Ok(cells)
}

fn same_resolution(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

impl ObjectDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedDocument(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Document describing the reference orientation of `model`.
    pub fn from_model(model: &ObjectModel, grid: Option<&GridSpec>) -> Self {
        let o = model.orientation(0);
        Self {
            name: model.name().to_string(),
            dims: o.dims(),
            occupancy: encode_rle(o.occupancy()),
            res_xy: grid.map(|g| g.res_xy),
            res_z: grid.map(|g| g.res_z),
        }
    }

    /// Decodes the occupancy and builds the object model. When the document carries
    /// resolutions they must match `grid`.
    pub fn to_model(&self, grid: Option<&GridSpec>) -> Result<ObjectModel> {
        if let Some(g) = grid {
            if let Some(r) = self.res_xy {
                if !same_resolution(r, g.res_xy) {
                    return Err(Error::MalformedDocument(format!(
                        "res_xy {r} does not match grid {}",
                        g.res_xy
                    )));
                }
            }
            if let Some(r) = self.res_z {
                if !same_resolution(r, g.res_z) {
                    return Err(Error::MalformedDocument(format!(
                        "res_z {r} does not match grid {}",
                        g.res_z
                    )));
                }
            }
        }
        let [w, d, h] = self.dims;
        let cells = decode_rle(&self.occupancy)?;
        if cells.len() != w * d * h {
            return Err(Error::MalformedDocument(format!(
                "occupancy encodes {} cells, dims {:?} need {}",
                cells.len(),
                self.dims,
                w * d * h
            )));
        }
        ObjectModel::from_voxels(self.name.clone(), self.dims, cells)
    }
}

pub fn load_object(text: &str, grid: Option<&GridSpec>) -> Result<ObjectModel> {
    ObjectDocument::parse(text)?.to_model(grid)
}

pub fn save_object(model: &ObjectModel, grid: Option<&GridSpec>) -> String {
    ObjectDocument::from_model(model, grid).to_json()
}
