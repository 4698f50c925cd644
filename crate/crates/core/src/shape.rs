//! Procedural shape descriptions with analytic inside tests.

use serde::{Deserialize, Serialize};

/// A solid described by its dimensions in meters. The shape's local origin is the center of its
/// footprint on the bottom face; `z` grows upward from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    Box {
        x: f64,
        y: f64,
        z: f64,
    },
    Cylinder {
        radius: f64,
        height: f64,
    },
    Ellipsoid {
        rx: f64,
        ry: f64,
        rz: f64,
    },
    /// Truncated cone.
    Frustum {
        bottom_radius: f64,
        top_radius: f64,
        height: f64,
    },
    /// Open-top cylindrical container.
    Cup {
        radius: f64,
        height: f64,
        wall: f64,
        base: f64,
    },
    /// Box with one footprint corner removed over the full height.
    LBlock {
        x: f64,
        y: f64,
        z: f64,
        notch_x: f64,
        notch_y: f64,
    },
}

/// Tie tolerance for voxel centers lying exactly on a shape boundary, in cell units.
const EPS: f64 = 1e-9;

impl ShapeSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ShapeSpec::Box { .. } => "box",
            ShapeSpec::Cylinder { .. } => "cylinder",
            ShapeSpec::Ellipsoid { .. } => "ellipsoid",
            ShapeSpec::Frustum { .. } => "frustum",
            ShapeSpec::Cup { .. } => "cup",
            ShapeSpec::LBlock { .. } => "lblock",
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let dims: Vec<f64> = match *self {
            ShapeSpec::Box { x, y, z } => vec![x, y, z],
            ShapeSpec::Cylinder { radius, height } => vec![radius, height],
            ShapeSpec::Ellipsoid { rx, ry, rz } => vec![rx, ry, rz],
            ShapeSpec::Frustum {
                bottom_radius,
                top_radius,
                height,
            } => {
                if bottom_radius <= 0.0 && top_radius <= 0.0 {
                    return Err("frustum needs a positive radius".into());
                }
                vec![bottom_radius.max(top_radius), height]
            }
            ShapeSpec::Cup {
                radius,
                height,
                wall,
                base,
            } => {
                if wall >= radius || base >= height {
                    return Err("cup wall/base must be thinner than the cup".into());
                }
                vec![radius, height, wall, base]
            }
            ShapeSpec::LBlock {
                x,
                y,
                z,
                notch_x,
                notch_y,
            } => {
                if notch_x >= x || notch_y >= y || notch_x < 0.0 || notch_y < 0.0 {
                    return Err("l-block notch must be smaller than the block".into());
                }
                vec![x, y, z]
            }
        };
        if dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            Ok(())
        } else {
            Err(format!("non-positive dimension in {self:?}"))
        }
    }

    /// Re-expresses the dimensions in cell units: horizontal lengths divided by `res_xy`,
    /// vertical ones by `res_z`.
    pub fn in_cells(&self, res_xy: f64, res_z: f64) -> ShapeSpec {
        let h = |v: f64| v / res_xy;
        let v = |v: f64| v / res_z;
        match *self {
            ShapeSpec::Box { x, y, z } => ShapeSpec::Box {
                x: h(x),
                y: h(y),
                z: v(z),
            },
            ShapeSpec::Cylinder { radius, height } => ShapeSpec::Cylinder {
                radius: h(radius),
                height: v(height),
            },
            ShapeSpec::Ellipsoid { rx, ry, rz } => ShapeSpec::Ellipsoid {
                rx: h(rx),
                ry: h(ry),
                rz: v(rz),
            },
            ShapeSpec::Frustum {
                bottom_radius,
                top_radius,
                height,
            } => ShapeSpec::Frustum {
                bottom_radius: h(bottom_radius),
                top_radius: h(top_radius),
                height: v(height),
            },
            ShapeSpec::Cup {
                radius,
                height,
                wall,
                base,
            } => ShapeSpec::Cup {
                radius: h(radius),
                height: v(height),
                wall: h(wall),
                base: v(base),
            },
            ShapeSpec::LBlock {
                x,
                y,
                z,
                notch_x,
                notch_y,
            } => ShapeSpec::LBlock {
                x: h(x),
                y: h(y),
                z: v(z),
                notch_x: h(notch_x),
                notch_y: h(notch_y),
            },
        }
    }

    pub fn height(&self) -> f64 {
        match *self {
            ShapeSpec::Box { z, .. } | ShapeSpec::LBlock { z, .. } => z,
            ShapeSpec::Cylinder { height, .. } | ShapeSpec::Frustum { height, .. } | ShapeSpec::Cup { height, .. } => {
                height
            }
            ShapeSpec::Ellipsoid { rz, .. } => 2.0 * rz,
        }
    }

    /// Half extents of the footprint after rotating the shape about `z` by the angle with the
    /// given cosine and sine.
    pub fn rotated_half_extents(&self, cos: f64, sin: f64) -> (f64, f64) {
        let (c, s) = (cos.abs(), sin.abs());
        match *self {
            ShapeSpec::Box { x, y, .. } | ShapeSpec::LBlock { x, y, .. } => {
                let (hx, hy) = (x / 2.0, y / 2.0);
                (hx * c + hy * s, hx * s + hy * c)
            }
            ShapeSpec::Cylinder { radius, .. } | ShapeSpec::Cup { radius, .. } => (radius, radius),
            ShapeSpec::Frustum {
                bottom_radius,
                top_radius,
                ..
            } => {
                let r = bottom_radius.max(top_radius);
                (r, r)
            }
            ShapeSpec::Ellipsoid { rx, ry, .. } => (
                (rx * rx * c * c + ry * ry * s * s).sqrt(),
                (rx * rx * s * s + ry * ry * c * c).sqrt(),
            ),
        }
    }

    /// Inside test in the shape's local frame.
    pub fn contains(&self, x: f64, y: f64, z: f64) -> bool {
        match *self {
            ShapeSpec::Box { x: sx, y: sy, z: sz } => {
                x.abs() <= sx / 2.0 + EPS && y.abs() <= sy / 2.0 + EPS && z >= -EPS && z <= sz + EPS
            }
            ShapeSpec::Cylinder { radius, height } => {
                z >= -EPS && z <= height + EPS && x * x + y * y <= radius * radius + EPS
            }
            ShapeSpec::Ellipsoid { rx, ry, rz } => {
                let (u, v, w) = (x / rx, y / ry, (z - rz) / rz);
                u * u + v * v + w * w <= 1.0 + EPS
            }
            ShapeSpec::Frustum {
                bottom_radius,
                top_radius,
                height,
            } => {
                if z < -EPS || z > height + EPS {
                    return false;
                }
                let t = (z / height).clamp(0.0, 1.0);
                let r = bottom_radius + (top_radius - bottom_radius) * t;
                x * x + y * y <= r * r + EPS
            }
            ShapeSpec::Cup {
                radius,
                height,
                wall,
                base,
            } => {
                if z < -EPS || z > height + EPS {
                    return false;
                }
                let rr = x * x + y * y;
                if rr > radius * radius + EPS {
                    return false;
                }
                let inner = radius - wall;
                !(z > base + EPS && rr < inner * inner - EPS)
            }
            ShapeSpec::LBlock {
                x: sx,
                y: sy,
                z: sz,
                notch_x,
                notch_y,
            } => {
                let in_box = x.abs() <= sx / 2.0 + EPS && y.abs() <= sy / 2.0 + EPS && z >= -EPS && z <= sz + EPS;
                // notch occupies the (+x, +y) corner
                let in_notch = x > sx / 2.0 - notch_x + EPS && y > sy / 2.0 - notch_y + EPS;
                in_box && !in_notch
            }
        }
    }
}
