//! Human-readable step logs and heightmap dumps.

use crate::engine::{PackingRun, StepRecord};

/// One line per step.
pub fn render_step(rec: &StepRecord) -> String {
    match rec {
        StepRecord::Placed {
            step,
            object,
            name,
            placement: p,
            score,
            terms,
        } => format!(
            "step {step:>3}  object {object:>3} {name:<16} placed  x={:<3} y={:<3} z={:<4} r={}  score={score:.6}  distance={:.6} regularity={:.6} height={:.6}",
            p.x, p.y, p.z, p.r, terms.distance, terms.regularity, terms.height
        ),
        StepRecord::Failed { step, object, name } => {
            format!("step {step:>3}  object {object:>3} {name:<16} failed")
        }
    }
}

/// The full step log followed by a summary line.
pub fn render_trace(run: &PackingRun) -> String {
    let r = &run.result;
    let mut out = format!(
        "# method {}  mode {}  K {}  seed {}\n",
        r.method, r.mode, r.buffer_k, r.seed
    );
    for rec in &run.log {
        out.push_str(&render_step(rec));
        out.push('\n');
    }
    out.push_str(&format!(
        "# packed {} objects, {:.4} cm^3, compactness {:.6}, failures {}\n",
        r.objects_packed, r.packed_volume_cm3, r.compactness, r.failures
    ));
    out
}

/// File name and contents of each per-step heightmap dump.
pub fn heightmap_dumps(run: &PackingRun) -> Vec<(String, String)> {
    run.snapshots
        .iter()
        .enumerate()
        .map(|(i, hm)| (format!("heightmap_{:03}.txt", i + 1), hm.to_text()))
        .collect()
}

pub fn failure_count(log: &[StepRecord]) -> usize {
    log.iter().filter(|r| matches!(r, StepRecord::Failed { .. })).count()
}
