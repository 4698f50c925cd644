//! Heightmap and truncated-distance-field placement engine for 3D bin packing.
//!
//! The container is modelled by a top-down [`Heightmap`]; a [`TsdfField`] built from it scores
//! how tightly a candidate placement nestles against packed objects and walls. Objects are voxel
//! grids at four in-plane orientations ([`ObjectModel`]). The [`engine`] runs the packing loop in
//! fixed-order or buffered mode and [`bench`] drives seeded campaigns over many sequences.

pub mod bench;
pub mod document;
pub mod engine;
pub mod error;
pub mod grid;
pub mod heuristics;
pub mod hull;
pub mod object;
pub mod placement;
pub mod sequence;
pub mod shape;
pub mod trace;
pub mod tsdf;

pub use bench::{run_ablation, run_campaign, AblationArm, BenchConfig, CampaignReport, ModeKind};
pub use document::{load_object, save_object, ObjectDocument};
pub use engine::{
    compute_metrics, pack, pack_buffered, pack_fixed, replay, EngineConfig, Mode, OrderRule, PackedObject,
    PackingResult, PackingRun, PackingState, StepRecord,
};
pub use error::{Error, Result};
pub use grid::{ColumnRect, GridSpec, Heightmap, OccupancyView};
pub use heuristics::{HeuristicConfig, Method, MethodSpec, ScoredPlacement, SdfTerms};
pub use object::{rasterize_shape, ObjectModel, OrientedObject, ORIENTATIONS};
pub use placement::{apply_placement, drop_height, stability_test, FeasibleSet, Placement, Slot};
pub use sequence::{generate_sequence, GeneratorConfig, ObjectSequence, ShapeFamily};
pub use shape::ShapeSpec;
pub use tsdf::{CellBox, DistanceUnits, FieldUpdate, TsdfField, TsdfParams};
