//! Fixtures shared by the benchmarks.

use binpack_core::{
    apply_placement, generate_sequence, FeasibleSet, GeneratorConfig, GridSpec, Heightmap, ObjectSequence,
};

/// The first `n` objects of a fixed sequence on the default grid.
pub fn sequence(n: usize) -> ObjectSequence {
    generate_sequence(2024, n, &GeneratorConfig::default(), &GridSpec::default()).expect("default generator")
}

/// Container after dropping `n` objects at their first feasible placement.
pub fn partly_filled(n: usize) -> Heightmap {
    let grid = GridSpec::default();
    let mut hm = grid.empty_heightmap();
    for model in &sequence(n).objects {
        if let Some(p) = FeasibleSet::enumerate(&hm, model, &grid).placements().next() {
            hm = apply_placement(&hm, model.orientation(p.r), p, grid.cells_z).expect("feasible placement");
        }
    }
    hm
}
