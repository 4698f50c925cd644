//! Acceptance suite. Runs every criterion in order, prints one line per criterion and exits
//! non-zero if any of them fails. Oracles here are written independently of the library code.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use binpack_core::bench::{run_ablation, run_campaign, AblationArm, BenchConfig, CampaignReport, ModeKind};
use binpack_core::heuristics::{
    balance_term, regularity_term, score_sdf_min, score_size_balanced, sdf_terms, select_placement, ScoredPlacement,
};
use binpack_core::object::OrientedObject;
use binpack_core::tsdf::OCCUPIED;
use binpack_core::{
    apply_placement, drop_height, generate_sequence, pack, stability_test, EngineConfig, FeasibleSet, GeneratorConfig,
    GridSpec, Heightmap, HeuristicConfig, Method, MethodSpec, Mode, OrderRule, Placement, TsdfField, TsdfParams,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        true
    } else {
        (a - b).abs() / scale <= 1e-9
    }
}

fn random_heightmap(rng: &mut ChaCha8Rng, w: usize, d: usize, max: u32) -> Heightmap {
    let vals = if rng.random_bool(0.5) {
        (0..w * d).map(|_| rng.random_range(0..=max)).collect()
    } else {
        // Blocky terrain: a few raised rectangles over a flat base.
        let mut v = vec![rng.random_range(0..=max / 4); w * d];
        for _ in 0..rng.random_range(1..6) {
            let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..d));
            let (x1, y1) = (rng.random_range(x0..w) + 1, rng.random_range(y0..d) + 1);
            let h = rng.random_range(0..=max);
            for y in y0..y1 {
                for x in x0..x1 {
                    v[y * w + x] = v[y * w + x].max(h);
                }
            }
        }
        v
    };
    Heightmap::from_values(w, d, vals).unwrap()
}

/// Random voxel object with occupancy indexed `x` fastest, then `y`, then `z`.
fn random_object(rng: &mut ChaCha8Rng, max_xy: usize, max_z: usize) -> (OrientedObject, [usize; 3], Vec<bool>) {
    loop {
        let dims = [
            rng.random_range(1..=max_xy),
            rng.random_range(1..=max_xy),
            rng.random_range(1..=max_z),
        ];
        let fill = rng.random_range(0.3..1.0);
        let occ: Vec<bool> = (0..dims.iter().product::<usize>())
            .map(|_| rng.random_bool(fill))
            .collect();
        if occ.iter().any(|&b| b) {
            let obj = OrientedObject::from_occupancy(dims, occ.clone()).unwrap();
            return (obj, dims, occ);
        }
    }
}

// ---------------------------------------------------------------------------------------------
// 1. Distance field against exhaustive nearest-occupied search.

fn c1_tsdf_oracle() -> Outcome {
    let start = Instant::now();
    let (w, d, h) = (12usize, 12usize, 20usize);
    let grid = GridSpec::unit(w, d, h);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let taus = [1.5, 2.0, 3.0, 5.0, 7.5];
    let mut cells = 0usize;
    let mut mismatches = 0usize;
    for map in 0..200 {
        let hm = random_heightmap(&mut rng, w, d, h as u32);
        let tau = taus[map % taus.len()];
        let field = TsdfField::build(
            &hm,
            &grid,
            TsdfParams {
                tau,
                ..Default::default()
            },
        )
        .unwrap();
        let occupied = |x: i64, y: i64, z: i64| {
            x < 0 || y < 0 || x >= w as i64 || y >= d as i64 || z < 0 || z < hm.get(x as usize, y as usize) as i64
        };
        let cap = tau * tau;
        for y in 0..d as i64 {
            for x in 0..w as i64 {
                for z in 0..h as i64 {
                    cells += 1;
                    let got = field.get(x as usize, y as usize, z as usize);
                    if occupied(x, y, z) {
                        mismatches += (got != OCCUPIED) as usize;
                        continue;
                    }
                    let mut best = i64::MAX;
                    for sy in -1..=d as i64 {
                        for sx in -1..=w as i64 {
                            for sz in -1..h as i64 {
                                if occupied(sx, sy, sz) {
                                    best = best.min((sx - x).pow(2) + (sy - y).pow(2) + (sz - z).pow(2));
                                }
                            }
                        }
                    }
                    let ok = if best as f64 >= cap {
                        got == tau
                    } else {
                        (got * got).round() as i64 == best && got.to_bits() == (best as f64).sqrt().to_bits()
                    };
                    mismatches += (!ok) as usize;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 30.0,
        format!("200 maps, {cells} cells, {mismatches} mismatches, {secs:.1} s (limit 30 s)"),
    )
}

// ---------------------------------------------------------------------------------------------
// 2. Incremental updates against full recomputation.

fn bit_equal(a: &TsdfField, b: &TsdfField, grid: &GridSpec) -> bool {
    for y in 0..grid.cells_y {
        for x in 0..grid.cells_x {
            for z in 0..grid.cells_z {
                if a.get(x, y, z).to_bits() != b.get(x, y, z).to_bits() {
                    return false;
                }
            }
            if a.column_sum(x, y, 0, grid.cells_z).to_bits() != b.column_sum(x, y, 0, grid.cells_z).to_bits() {
                return false;
            }
        }
    }
    a == b
}

fn c2_incremental_equivalence() -> Outcome {
    let grid = GridSpec::default();
    // Halved sizes so that 50 random placements fit in the container.
    let mut gen = GeneratorConfig::default();
    for f in &mut gen.families {
        f.xy_cm = f.xy_cm.map(|v| v / 2.0);
        f.z_cm = f.z_cm.map(|v| v / 2.0);
    }
    let mut steps = 0usize;
    let mut bad = Vec::new();
    for run in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + run);
        let seq = generate_sequence(500 + run, 200, &gen, &grid).unwrap();
        let probes = generate_sequence(900 + run, 3, &gen, &grid).unwrap();
        let params = TsdfParams {
            tau: [3.0, 5.0, 8.0, 12.0][run as usize],
            ..Default::default()
        };
        let mut hm = grid.empty_heightmap();
        let mut field = TsdfField::build(&hm, &grid, params).unwrap();
        let mut sets: Vec<FeasibleSet> = probes
            .objects
            .iter()
            .map(|m| FeasibleSet::enumerate(&hm, m, &grid))
            .collect();
        let mut placed = 0;
        for model in &seq.objects {
            if placed == 50 {
                break;
            }
            let options: Vec<Placement> = FeasibleSet::enumerate(&hm, model, &grid).placements().collect();
            if options.is_empty() {
                continue;
            }
            let p = options[rng.random_range(0..options.len())];
            let new = apply_placement(&hm, model.orientation(p.r), p, grid.cells_z).unwrap();
            field.local_update(&hm, &new).unwrap();
            if !bit_equal(&field, &TsdfField::build(&new, &grid, params).unwrap(), &grid) {
                bad.push(format!("field run {run} step {placed}"));
            }
            if let Some(rect) = hm.changed_rect(&new) {
                for (set, m) in sets.iter_mut().zip(&probes.objects) {
                    set.refresh(&hm, &new, m, &grid, &rect);
                    if *set != FeasibleSet::enumerate(&new, m, &grid) {
                        bad.push(format!("feasible set run {run} step {placed}"));
                    }
                }
            }
            hm = new;
            placed += 1;
            steps += 1;
        }
    }
    // The engine's own self-check covers cached scores under every scored policy.
    let mut engine_steps = 0;
    let seq = generate_sequence(77, 50, &GeneratorConfig::default(), &grid).unwrap();
    let cfg = EngineConfig {
        verify: true,
        ..EngineConfig::default()
    };
    for method in [Method::Sdf, Method::Dbl, Method::Hm, Method::Mta] {
        for mode in [
            Mode::Fixed,
            Mode::Buffered {
                k: 5,
                order: OrderRule::Heuristic,
            },
        ] {
            match pack(&seq, MethodSpec::new(method), mode, &cfg) {
                Ok(run) => engine_steps += run.state.steps,
                Err(e) => bad.push(format!("{} {mode}: {e}", method.tag())),
            }
        }
    }
    outcome(
        bad.is_empty() && steps == 200,
        format!(
            "{steps} random placements over 4 runs, {engine_steps} verified engine steps, {} divergences{}",
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------------------------
// 3. Drop height against a triple-loop search.

/// Lowest `z >= 0` at which no object voxel overlaps the terrain. A column without object voxels
/// may hold terrain only up to the top of the bounding box.
fn naive_drop(hm: &Heightmap, dims: [usize; 3], occ: &[bool], x: usize, y: usize) -> u32 {
    let [w, d, h] = dims;
    let cell = |i: usize, j: usize, k: usize| occ[(k * d + j) * w + i];
    let mut z = 0u32;
    loop {
        let mut clear = true;
        'cols: for j in 0..d {
            for i in 0..w {
                let terrain = hm.get(x + i, y + j);
                let mut empty = true;
                for k in 0..h {
                    if cell(i, j, k) {
                        empty = false;
                        if z + (k as u32) < terrain {
                            clear = false;
                            break 'cols;
                        }
                    }
                }
                if empty && terrain > z + h as u32 {
                    clear = false;
                    break 'cols;
                }
            }
        }
        if clear {
            return z;
        }
        z += 1;
    }
}

fn c3_drop_height_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut mismatches = 0;
    let mut raised = 0;
    for _ in 0..1000 {
        let (w, d) = (rng.random_range(4..=12), rng.random_range(4..=12));
        let hm = random_heightmap(&mut rng, w, d, 15);
        let (obj, dims, occ) = random_object(&mut rng, 4.min(w).min(d), 6);
        let x = rng.random_range(0..=w - dims[0]);
        let y = rng.random_range(0..=d - dims[1]);
        let got = drop_height(&hm, &obj, x, y).unwrap();
        let want = naive_drop(&hm, dims, &occ, x, y);
        mismatches += (got != want) as usize;
        raised += (want > 0) as usize;
    }
    outcome(
        mismatches == 0,
        format!("1000 triples ({raised} above the floor), {mismatches} mismatches"),
    )
}

// ---------------------------------------------------------------------------------------------
// 4. Stability against a point-in-convex-polygon check.

fn cross(o: [i128; 2], a: [i128; 2], b: [i128; 2]) -> i128 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// True when `p` lies strictly inside the convex hull of `pts`: the hull must have area and `p`
/// must be strictly on the inner side of every supporting line through two of the points.
fn strictly_inside_hull(pts: &[[i128; 2]], p: [i128; 2]) -> bool {
    let has_area = pts
        .iter()
        .any(|&a| pts.iter().any(|&b| pts.iter().any(|&c| cross(a, b, c) != 0)));
    if !has_area {
        return false;
    }
    for &a in pts {
        for &b in pts {
            if a == b {
                continue;
            }
            if pts.iter().all(|&q| cross(a, b, q) >= 0) && cross(a, b, p) <= 0 {
                return false;
            }
        }
    }
    true
}

/// Each supporting column contributes its whole cell square; the mass center is compared in
/// coordinates scaled by twice the volume so that everything stays integral.
fn naive_stable(hm: &Heightmap, dims: [usize; 3], occ: &[bool], x: usize, y: usize, z: u32) -> Option<bool> {
    let [w, d, h] = dims;
    let cell = |i: usize, j: usize, k: usize| occ[(k * d + j) * w + i];
    let volume = occ.iter().filter(|&&b| b).count() as i128;
    let s = 2 * volume;
    let (mut mx, mut my) = (0i128, 0i128);
    for k in 0..h {
        for j in 0..d {
            for i in 0..w {
                if cell(i, j, k) {
                    mx += 2 * i as i128 + 1;
                    my += 2 * j as i128 + 1;
                }
            }
        }
    }
    let mut corners = BTreeSet::new();
    for j in 0..d {
        for i in 0..w {
            let Some(lowest) = (0..h).find(|&k| cell(i, j, k)) else {
                continue;
            };
            if z + lowest as u32 == hm.get(x + i, y + j) {
                let (i, j) = (i as i128, j as i128);
                for (ci, cj) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                    corners.insert([ci * s, cj * s]);
                }
            }
        }
    }
    if corners.is_empty() {
        return None;
    }
    let pts: Vec<[i128; 2]> = corners.into_iter().collect();
    Some(strictly_inside_hull(&pts, [mx, my]))
}

fn c4_stability_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut sets, mut stable, mut mismatches) = (0, 0, 0);
    for _ in 0..2000 {
        let (w, d) = (rng.random_range(4..=10), rng.random_range(4..=10));
        let hm = random_heightmap(&mut rng, w, d, 8);
        let (obj, dims, occ) = random_object(&mut rng, 5.min(w).min(d), 4);
        let x = rng.random_range(0..=w - dims[0]);
        let y = rng.random_range(0..=d - dims[1]);
        let z = drop_height(&hm, &obj, x, y).unwrap();
        let got = stability_test(&hm, &obj, Placement::new(x, y, z, 0)).unwrap();
        match naive_stable(&hm, dims, &occ, x, y, z) {
            Some(want) => {
                sets += 1;
                stable += want as usize;
                mismatches += (got != want) as usize;
            }
            None => mismatches += got as usize,
        }
    }
    outcome(
        sets >= 200 && mismatches == 0 && stable > 0 && stable < sets,
        format!("{sets} support sets ({stable} stable), {mismatches} mismatches"),
    )
}

// ---------------------------------------------------------------------------------------------
// 5. Objective arithmetic.

fn c5_heuristic_arithmetic() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let check = |failures: &mut Vec<String>, name: &str, got: f64, want: f64, exact: bool| {
        let ok = if exact {
            got.to_bits() == want.to_bits()
        } else {
            rel_close(got, want)
        };
        if !ok {
            failures.push(format!("{name}: {got} vs {want}"));
        }
    };
    let cfg = HeuristicConfig::default();
    let voxel = OrientedObject::from_occupancy([1, 1, 1], vec![true]).unwrap();

    // Field value 2 at (2, 2, 1) of an empty unit container: nearest occupied cell is the floor.
    let grid = GridSpec::unit(5, 5, 5);
    let field = TsdfField::build(&grid.empty_heightmap(), &grid, TsdfParams::default()).unwrap();
    let flat = HeuristicConfig { gamma: 0.0, ..cfg };
    check(&mut failures, "phi", field.get(2, 2, 1), 2.0, true);
    check(
        &mut failures,
        "voxel objective",
        score_sdf_min(&field, &voxel, Placement::new(2, 2, 1, 0), &flat),
        5.0,
        false,
    );
    let t = sdf_terms(&field, &voxel, Placement::new(2, 2, 1, 0), &cfg);
    check(&mut failures, "voxel distance term", t.distance, 5.0, false);
    check(&mut failures, "voxel regularity term", t.regularity, 0.0, false);
    check(&mut failures, "voxel height term", t.height, 1.0, false);

    let cube = OrientedObject::from_occupancy([2, 2, 2], vec![true; 8]).unwrap();
    check(
        &mut failures,
        "solid box regularity",
        regularity_term(&cube, cfg.beta),
        0.0,
        false,
    );
    let half = OrientedObject::from_occupancy([2, 1, 1], vec![true, false]).unwrap();
    check(
        &mut failures,
        "half-filled regularity",
        regularity_term(&half, cfg.beta),
        2.062_994_740_159_002,
        false,
    );

    let big = GridSpec::unit(10, 10, 10);
    check(
        &mut failures,
        "filling balance",
        balance_term(1000, &big, cfg.delta),
        0.0,
        false,
    );
    check(
        &mut failures,
        "1/1000 balance",
        balance_term(1, &big, cfg.delta),
        72.0,
        false,
    );
    let small_box = OrientedObject::from_occupancy([2, 2, 2], vec![true; 8]).unwrap();
    let large_box = OrientedObject::from_occupancy([4, 4, 4], vec![true; 64]).unwrap();
    let g = GridSpec::default();
    if balance_term(small_box.volume(), &g, cfg.delta) <= balance_term(large_box.volume(), &g, cfg.delta) {
        failures.push("balance does not prefer the larger object".into());
    }

    // Degenerate weights.
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let grid = GridSpec::unit(12, 12, 20);
    let mut deepest_ok = 0;
    for _ in 0..50 {
        let hm = random_heightmap(&mut rng, 12, 12, 10);
        let field = TsdfField::build(&hm, &grid, TsdfParams::default()).unwrap();
        let (obj, dims, _) = random_object(&mut rng, 4, 4);
        let model = binpack_core::ObjectModel::new("probe", None, vec![obj.clone(); 4]);
        let set = FeasibleSet::enumerate(&hm, &model, &grid);
        let zero = HeuristicConfig {
            alpha: 0.0,
            beta: 0.0,
            delta: 0.0,
            ..cfg
        };
        let mut scored = Vec::new();
        for p in set.placements() {
            let s = score_sdf_min(&field, &obj, p, &zero);
            check(&mut failures, "alpha = beta = 0 objective", s, p.z as f64, true);
            check(
                &mut failures,
                "delta = 0 balance",
                score_size_balanced(&field, &obj, p, &zero, &grid),
                s,
                true,
            );
            check(
                &mut failures,
                "alpha = 0 distance",
                sdf_terms(&field, &obj, p, &zero).distance,
                0.0,
                true,
            );
            scored.push(ScoredPlacement {
                placement: p,
                object: 0,
                score: s,
                terms: None,
            });
        }
        if let Ok(best) = select_placement(&scored) {
            let min_z = set.placements().map(|p| p.z).min().unwrap();
            if best.placement.z == min_z {
                deepest_ok += 1;
            } else {
                failures.push(format!(
                    "alpha = beta = 0 picked z = {} over {min_z} ({dims:?})",
                    best.placement.z
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "worked examples and degeneracies, {deepest_ok} deepest-placement checks, {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

// ---------------------------------------------------------------------------------------------
// 6-8. Campaigns on the standard suite (100 sequences of 50 objects).

fn mean(report: &CampaignReport, method: &str, mode: &str) -> f64 {
    report
        .line(method, mode)
        .unwrap_or_else(|| panic!("no report line for {method} / {mode}"))
        .mean_packed_volume_cm3
}

fn c6_direction_of_effect(report: &CampaignReport) -> (Outcome, Vec<String>) {
    let sdf = mean(report, "sdf", "fixed");
    let mut beaten = Vec::new();
    let mut parts = vec![format!("sdf {sdf:.2}")];
    for m in ["dbl", "hm", "mta", "ff", "random"] {
        let v = mean(report, m, "fixed");
        parts.push(format!("{m} {v:.2}"));
        if sdf < v {
            beaten.push(m);
        }
    }
    let gain = (sdf / mean(report, "dbl", "fixed") - 1.0) * 100.0;
    let (hm, dbl, mta) = (
        mean(report, "hm", "fixed"),
        mean(report, "dbl", "fixed"),
        mean(report, "mta", "fixed"),
    );
    let notes = vec![
        format!(
            "sdf vs dbl {gain:+.2}% (expected >= +3%): {}",
            if gain >= 3.0 { "met" } else { "not met" }
        ),
        format!(
            "hm >= dbl and hm >= mta: {}",
            if hm >= dbl && hm >= mta {
                "holds"
            } else {
                "does not hold"
            }
        ),
    ];
    let detail = format!(
        "{}; sdf {} every baseline",
        parts.join(", "),
        if beaten.is_empty() { ">=" } else { "below" }
    );
    (outcome(beaten.is_empty() && gain >= 0.0, detail), notes)
}

fn c7_buffered_gain(fixed: &CampaignReport, buffered: f64) -> Outcome {
    let f = mean(fixed, "sdf", "fixed");
    outcome(
        buffered >= f,
        format!("buffered K=5 heuristic order {buffered:.2} vs fixed {f:.2}"),
    )
}

fn c8_ablations(fixed_full: f64, fixed_arms: &[(AblationArm, f64)], buffered: &[(AblationArm, f64)]) -> Outcome {
    let buffered_full = buffered.iter().find(|(a, _)| *a == AblationArm::Full).unwrap().1;
    let mut ok = true;
    let mut parts = Vec::new();
    for &(arm, v) in fixed_arms.iter().filter(|(a, _)| *a != AblationArm::Full) {
        ok &= v <= fixed_full;
        parts.push(format!("{arm} fixed {v:.2} vs {fixed_full:.2}"));
    }
    for &(arm, v) in buffered.iter().filter(|(a, _)| *a != AblationArm::Full) {
        ok &= v <= buffered_full;
        parts.push(format!("{arm} buffered {v:.2} vs {buffered_full:.2}"));
    }
    outcome(ok, parts.join("; "))
}

// ---------------------------------------------------------------------------------------------
// 9. Decision time and incremental speedup.

fn c9_performance() -> Outcome {
    let grid = GridSpec::default();
    let gen = GeneratorConfig::default();
    let cfg = EngineConfig::default();
    let mut worst_ms: f64 = 0.0;
    for seed in 0..3 {
        let seq = generate_sequence(seed, 50, &gen, &grid).unwrap();
        for mode in [
            Mode::Fixed,
            Mode::Buffered {
                k: 5,
                order: OrderRule::Heuristic,
            },
        ] {
            let run = pack(&seq, MethodSpec::new(Method::Sdf), mode, &cfg).unwrap();
            worst_ms = worst_ms.max(run.result.time_per_object_ms);
        }
    }
    let seq = generate_sequence(4040, 40, &gen, &grid).unwrap();
    let mode = Mode::Buffered {
        k: 5,
        order: OrderRule::Heuristic,
    };
    let timed = |incremental: bool| {
        let cfg = EngineConfig {
            incremental,
            ..EngineConfig::default()
        };
        (0..5)
            .map(|_| {
                let t = Instant::now();
                pack(&seq, MethodSpec::new(Method::Sdf), mode, &cfg).unwrap();
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let inc = timed(true);
    let full = timed(false);
    let speedup = full / inc;
    outcome(
        worst_ms <= 2000.0 && speedup >= 3.0,
        format!(
            "worst mean decision time {worst_ms:.2} ms/object (limit 2000); 40-object run incremental {:.0} ms vs full {:.0} ms = {speedup:.2}x (need 3x)",
            inc * 1e3,
            full * 1e3
        ),
    )
}

// ---------------------------------------------------------------------------------------------
// 10. Byte-identical CSV from two executions of the binary.

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    std::fs::write(
        &config,
        "sequences = 3\nobjects_per_sequence = 15\nmaster_seed = 99\n\
         methods = [\"sdf\", \"dbl\", \"hm\", \"mta\", \"ff\", \"random\"]\n\
         modes = [\"fixed\", \"buffered-volume\", \"buffered-heuristic\"]\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_binpack"))
            .arg("bench")
            .arg("--config")
            .arg(&config)
            .arg("--output")
            .arg(&out)
            .arg("--report")
            .arg(dir.path().join(format!("{name}.report")))
            .status()
            .unwrap();
        assert!(status.success(), "bench exited with {status}");
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    let rows = a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
    outcome(
        !a.is_empty() && a == b,
        format!(
            "two runs, {rows} rows, {} and {} bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    // Numeric arguments select criteria; with none, everything runs.
    let picked: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| picked.is_empty() || picked.contains(&n);
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &str, o: Outcome| {
        println!("[{}] {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };

    if wanted(1) {
        report(1, "distance field oracle", c1_tsdf_oracle());
    }
    if wanted(2) {
        report(2, "incremental equivalence", c2_incremental_equivalence());
    }
    if wanted(3) {
        report(3, "drop height oracle", c3_drop_height_oracle());
    }
    if wanted(4) {
        report(4, "stability oracle", c4_stability_oracle());
    }
    if wanted(5) {
        report(5, "objective arithmetic", c5_heuristic_arithmetic());
    }

    if wanted(6) || wanted(7) || wanted(8) {
        let suite = BenchConfig::default();
        let campaign = run_campaign(&suite).unwrap();
        if wanted(6) {
            let (c6, notes) = c6_direction_of_effect(&campaign.report);
            report(6, "direction of effect", c6);
            for n in notes {
                println!("       info: {n}");
            }
        }
        let sdf_suite = BenchConfig {
            methods: vec![MethodSpec::new(Method::Sdf)],
            ..suite.clone()
        };
        let buffered_ab = run_ablation(
            &BenchConfig {
                modes: vec![ModeKind::BufferedHeuristic],
                ..sdf_suite.clone()
            },
            &[AblationArm::Full, AblationArm::NoBalance],
        )
        .unwrap();
        let means = |ab: &binpack_core::bench::Ablation| -> Vec<(AblationArm, f64)> {
            ab.lines
                .iter()
                .map(|l| (l.arm, l.line.mean_packed_volume_cm3))
                .collect()
        };
        let buffered_arms = means(&buffered_ab);
        if wanted(7) {
            let buffered_full = buffered_arms.iter().find(|(a, _)| *a == AblationArm::Full).unwrap().1;
            report(7, "buffered gain", c7_buffered_gain(&campaign.report, buffered_full));
        }
        if wanted(8) {
            let fixed_ab = run_ablation(
                &BenchConfig {
                    modes: vec![ModeKind::Fixed],
                    ..sdf_suite
                },
                &[
                    AblationArm::Full,
                    AblationArm::NoDistance,
                    AblationArm::NoDistanceRegularity,
                ],
            )
            .unwrap();
            let fixed_arms = means(&fixed_ab);
            report(
                8,
                "ablations",
                c8_ablations(mean(&campaign.report, "sdf", "fixed"), &fixed_arms, &buffered_arms),
            );
        }
    }

    if wanted(9) {
        report(9, "performance", c9_performance());
    }
    if wanted(10) {
        report(10, "determinism", c10_determinism());
    }

    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(", failed: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
