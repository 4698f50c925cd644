//! Seeded benchmark campaigns: every method and mode on the same sequence set, CSV rows and
//! aggregate reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{pack, EngineConfig, Mode, OrderRule, PackingResult};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::heuristics::{HeuristicConfig, Method, MethodSpec};
use crate::sequence::{generate_sequence, GeneratorConfig, ObjectSequence};
use crate::tsdf::TsdfParams;

pub const CSV_COLUMNS: [&str; 9] = [
    "seed",
    "method",
    "mode",
    "buffer_k",
    "packed_volume_cm3",
    "compactness",
    "objects_packed",
    "failures",
    "time_per_object_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Fixed,
    BufferedVolume,
    BufferedHeuristic,
}

impl ModeKind {
    pub fn with_k(self, k: usize) -> Mode {
        match self {
            ModeKind::Fixed => Mode::Fixed,
            ModeKind::BufferedVolume => Mode::Buffered {
                k,
                order: OrderRule::VolumeDecreasing,
            },
            ModeKind::BufferedHeuristic => Mode::Buffered {
                k,
                order: OrderRule::Heuristic,
            },
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeKind::Fixed => "fixed",
            ModeKind::BufferedVolume => "buffered-volume",
            ModeKind::BufferedHeuristic => "buffered-heuristic",
        })
    }
}

impl FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixed" => Ok(ModeKind::Fixed),
            "buffered-volume" => Ok(ModeKind::BufferedVolume),
            "buffered-heuristic" => Ok(ModeKind::BufferedHeuristic),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode `{other}` (expected fixed, buffered-volume or buffered-heuristic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub grid: GridSpec,
    pub tsdf: TsdfParams,
    pub heuristic: HeuristicConfig,
    pub generator: GeneratorConfig,
    pub methods: Vec<MethodSpec>,
    pub modes: Vec<ModeKind>,
    pub buffer_k: usize,
    pub fail_limit: usize,
    pub sequences: usize,
    pub objects_per_sequence: usize,
    pub master_seed: u64,
    /// CSV destination; the CLI prints to stdout when unset.
    pub output: Option<String>,
    /// Fill the timing column. Off by default so that reruns are byte-identical.
    pub timing: bool,
    pub incremental: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            tsdf: TsdfParams::default(),
            heuristic: HeuristicConfig::default(),
            generator: GeneratorConfig::default(),
            methods: Method::ALL.iter().map(|&m| MethodSpec::new(m)).collect(),
            modes: vec![ModeKind::Fixed],
            buffer_k: 5,
            fail_limit: 5,
            sequences: 100,
            objects_per_sequence: 50,
            master_seed: 2024,
            output: None,
            timing: false,
            incremental: true,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.engine().validate()?;
        self.generator.validate(&self.grid)?;
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods selected".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("no modes selected".into()));
        }
        if self.buffer_k == 0 {
            return Err(Error::InvalidConfig("buffer_k must be at least 1".into()));
        }
        if self.sequences == 0 || self.objects_per_sequence == 0 {
            return Err(Error::InvalidConfig(
                "sequences and objects_per_sequence must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            grid: self.grid,
            tsdf: self.tsdf,
            heuristic: self.heuristic,
            fail_limit: self.fail_limit,
            incremental: self.incremental,
            verify: false,
            record_log: false,
        }
    }

    /// Seeds of the campaign's sequences, drawn from the master seed.
    pub fn sequence_seeds(&self) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        (0..self.sequences).map(|_| rng.random()).collect()
    }

    pub fn sequence(&self, seed: u64) -> Result<ObjectSequence> {
        generate_sequence(seed, self.objects_per_sequence, &self.generator, &self.grid)
    }
}

/// Runs every (method, mode) pair on every sequence. Rows are ordered by sequence, then method
/// and mode in configuration order, regardless of scheduling.
pub fn run_rows(cfg: &BenchConfig) -> Result<Vec<PackingResult>> {
    cfg.validate()?;
    let engine = cfg.engine();
    let per_sequence: Vec<Result<Vec<PackingResult>>> = cfg
        .sequence_seeds()
        .into_par_iter()
        .map(|seed| {
            let seq = cfg.sequence(seed)?;
            let mut rows = Vec::with_capacity(cfg.methods.len() * cfg.modes.len());
            for &method in &cfg.methods {
                for &mode in &cfg.modes {
                    rows.push(pack(&seq, method, mode.with_k(cfg.buffer_k), &engine)?.result);
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_sequence {
        rows.extend(r?);
    }
    Ok(rows)
}

fn row_fields(r: &PackingResult, timing: bool) -> [String; 9] {
    [
        r.seed.to_string(),
        r.method.clone(),
        r.mode.clone(),
        r.buffer_k.to_string(),
        format!("{:.4}", r.packed_volume_cm3),
        format!("{:.6}", r.compactness),
        r.objects_packed.to_string(),
        r.failures.to_string(),
        if timing {
            format!("{:.4}", r.time_per_object_ms)
        } else {
            String::new()
        },
    ]
}

pub fn write_csv<W: Write>(rows: &[PackingResult], timing: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(row_fields(r, timing))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[PackingResult], timing: bool) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, timing, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

/// Parses rows written by [`write_csv`]. An empty timing cell reads as 0.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<PackingResult>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let expected: csv::StringRecord = CSV_COLUMNS.iter().collect();
    if headers != expected {
        return Err(Error::MalformedDocument(format!("unexpected CSV header {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            let s = &rec[i];
            if s.is_empty() {
                return Ok(0.0);
            }
            s.parse()
                .map_err(|_| Error::MalformedDocument(format!("bad number `{s}` in column {}", CSV_COLUMNS[i])))
        };
        let int = |i: usize| -> Result<u64> {
            rec[i].parse().map_err(|_| {
                Error::MalformedDocument(format!("bad integer `{}` in column {}", &rec[i], CSV_COLUMNS[i]))
            })
        };
        rows.push(PackingResult {
            seed: int(0)?,
            method: rec[1].to_string(),
            mode: rec[2].to_string(),
            buffer_k: int(3)? as usize,
            packed_volume_cm3: num(4)?,
            compactness: num(5)?,
            objects_packed: int(6)? as usize,
            failures: int(7)? as usize,
            time_per_object_ms: num(8)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportLine {
    pub method: String,
    pub mode: String,
    pub buffer_k: usize,
    pub runs: usize,
    pub mean_packed_volume_cm3: f64,
    pub mean_compactness: f64,
    pub mean_objects_packed: f64,
    pub mean_time_per_object_ms: f64,
    /// Percentage gain in mean packed volume over `dbl` in the same mode.
    pub vol_inc_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub lines: Vec<ReportLine>,
}

impl CampaignReport {
    /// Aggregates rows per (method, mode), keeping first-appearance order.
    pub fn from_rows(rows: &[PackingResult]) -> Self {
        let mut order: Vec<(String, String)> = Vec::new();
        let mut groups: BTreeMap<(String, String), Vec<&PackingResult>> = BTreeMap::new();
        for r in rows {
            let key = (r.method.clone(), r.mode.clone());
            let g = groups.entry(key.clone()).or_default();
            if g.is_empty() {
                order.push(key);
            }
            g.push(r);
        }
        let mean =
            |g: &[&PackingResult], f: fn(&PackingResult) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / g.len() as f64;
        let mut lines: Vec<ReportLine> = order
            .iter()
            .map(|key| {
                let g = &groups[key];
                ReportLine {
                    method: key.0.clone(),
                    mode: key.1.clone(),
                    buffer_k: g[0].buffer_k,
                    runs: g.len(),
                    mean_packed_volume_cm3: mean(g, |r| r.packed_volume_cm3),
                    mean_compactness: mean(g, |r| r.compactness),
                    mean_objects_packed: mean(g, |r| r.objects_packed as f64),
                    mean_time_per_object_ms: mean(g, |r| r.time_per_object_ms),
                    vol_inc_pct: None,
                }
            })
            .collect();
        let baselines: BTreeMap<String, f64> = lines
            .iter()
            .filter(|l| l.method == "dbl")
            .map(|l| (l.mode.clone(), l.mean_packed_volume_cm3))
            .collect();
        for l in &mut lines {
            l.vol_inc_pct = baselines.get(&l.mode).map(|&b| {
                if l.method == "dbl" {
                    0.0
                } else if b > 0.0 {
                    (l.mean_packed_volume_cm3 - b) / b * 100.0
                } else {
                    0.0
                }
            });
        }
        Self { lines }
    }

    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        Ok(Self::from_rows(&read_csv(input)?))
    }

    pub fn line(&self, method: &str, mode: &str) -> Option<&ReportLine> {
        self.lines.iter().find(|l| l.method == method && l.mode == mode)
    }

    pub fn render(&self) -> String {
        let mut out = String::from(
            "# time covers placement decisions only\n\
             method             mode                 K   runs  volume_cm3  compactness  objects  time_ms  vol_inc_%\n",
        );
        for l in &self.lines {
            let inc = l.vol_inc_pct.map_or("-".to_string(), |v| format!("{v:+.2}"));
            out.push_str(&format!(
                "{:<18} {:<20} {:>2} {:>6} {:>11.2} {:>12.4} {:>8.2} {:>8.3} {:>10}\n",
                l.method,
                l.mode,
                l.buffer_k,
                l.runs,
                l.mean_packed_volume_cm3,
                l.mean_compactness,
                l.mean_objects_packed,
                l.mean_time_per_object_ms,
                inc
            ));
        }
        out
    }
}

/// CSV text and the report recomputed from it.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub csv: String,
    pub report: CampaignReport,
}

pub fn run_campaign(cfg: &BenchConfig) -> Result<Campaign> {
    let rows = run_rows(cfg)?;
    let csv = csv_string(&rows, cfg.timing)?;
    let report = CampaignReport::from_csv(csv.as_bytes())?;
    Ok(Campaign { csv, report })
}

/// One term-ablation setting of the distance-field objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationArm {
    Full,
    /// alpha = 0
    NoDistance,
    /// alpha = beta = 0
    NoDistanceRegularity,
    /// delta = 0
    NoBalance,
}

impl AblationArm {
    pub const ALL: [AblationArm; 4] = [
        AblationArm::Full,
        AblationArm::NoDistance,
        AblationArm::NoDistanceRegularity,
        AblationArm::NoBalance,
    ];

    pub fn apply(self, h: HeuristicConfig) -> HeuristicConfig {
        match self {
            AblationArm::Full => h,
            AblationArm::NoDistance => HeuristicConfig { alpha: 0.0, ..h },
            AblationArm::NoDistanceRegularity => HeuristicConfig {
                alpha: 0.0,
                beta: 0.0,
                ..h
            },
            AblationArm::NoBalance => HeuristicConfig { delta: 0.0, ..h },
        }
    }
}

impl fmt::Display for AblationArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationArm::Full => "full",
            AblationArm::NoDistance => "no-distance",
            AblationArm::NoDistanceRegularity => "no-distance-regularity",
            AblationArm::NoBalance => "no-balance",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationLine {
    pub arm: AblationArm,
    pub line: ReportLine,
    /// Percentage change of mean packed volume relative to the full arm in the same mode.
    pub delta_pct: f64,
}

#[derive(Debug, Clone)]
pub struct Ablation {
    pub csv: String,
    pub lines: Vec<AblationLine>,
}

impl Ablation {
    pub fn line(&self, arm: AblationArm, mode: &str) -> Option<&AblationLine> {
        self.lines.iter().find(|l| l.arm == arm && l.line.mode == mode)
    }

    pub fn render(&self) -> String {
        let mut out =
            String::from("arm                      mode                 volume_cm3  compactness  objects  delta_%\n");
        for l in &self.lines {
            out.push_str(&format!(
                "{:<24} {:<20} {:>10.2} {:>12.4} {:>8.2} {:>+8.2}\n",
                l.arm.to_string(),
                l.line.mode,
                l.line.mean_packed_volume_cm3,
                l.line.mean_compactness,
                l.line.mean_objects_packed,
                l.delta_pct
            ));
        }
        out
    }
}

/// Reruns the campaign's modes for each arm of `arms` on the same sequences. Only the
/// distance-field methods of the configuration are kept (plain `sdf` if there are none).
pub fn run_ablation(cfg: &BenchConfig, arms: &[AblationArm]) -> Result<Ablation> {
    let mut methods: Vec<MethodSpec> = cfg
        .methods
        .iter()
        .copied()
        .filter(|m| m.method == Method::Sdf)
        .collect();
    if methods.is_empty() {
        methods.push(MethodSpec::new(Method::Sdf));
    }
    let mut csv_out = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["arm"];
    header.extend(CSV_COLUMNS);
    csv_out.write_record(&header)?;
    let mut per_arm = Vec::new();
    for &arm in arms {
        let arm_cfg = BenchConfig {
            heuristic: arm.apply(cfg.heuristic),
            methods: methods.clone(),
            ..cfg.clone()
        };
        let rows = run_rows(&arm_cfg)?;
        for r in &rows {
            let mut rec = vec![arm.to_string()];
            rec.extend(row_fields(r, cfg.timing));
            csv_out.write_record(&rec)?;
        }
        let text = csv_string(&rows, cfg.timing)?;
        per_arm.push((arm, CampaignReport::from_csv(text.as_bytes())?));
    }
    let full: Option<&CampaignReport> = per_arm.iter().find(|(a, _)| *a == AblationArm::Full).map(|(_, r)| r);
    let mut lines = Vec::new();
    for (arm, report) in &per_arm {
        for l in &report.lines {
            let base = full
                .and_then(|f| f.line(&l.method, &l.mode))
                .map(|b| b.mean_packed_volume_cm3);
            let delta_pct = match base {
                Some(b) if b > 0.0 => (l.mean_packed_volume_cm3 - b) / b * 100.0,
                _ => 0.0,
            };
            lines.push(AblationLine {
                arm: *arm,
                line: l.clone(),
                delta_pct,
            });
        }
    }
    let bytes = csv_out.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    let csv = String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(Ablation { csv, lines })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            grid: GridSpec::new(24, 24, 90, 0.01, 0.002).unwrap(),
            sequences: 3,
            objects_per_sequence: 6,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn dbl_only_campaign_has_zero_increment() {
        let cfg = BenchConfig {
            methods: vec!["dbl".parse().unwrap()],
            ..small()
        };
        let c = run_campaign(&cfg).unwrap();
        assert_eq!(c.report.lines.len(), 1);
        assert_eq!(c.report.lines[0].vol_inc_pct, Some(0.0));
        assert_eq!(c.csv.lines().count(), 1 + 3);
    }

    #[test]
    fn campaign_is_repeatable_and_ordered() {
        let cfg = BenchConfig {
            methods: vec!["sdf".parse().unwrap(), "ff".parse().unwrap()],
            modes: vec![ModeKind::Fixed, ModeKind::BufferedHeuristic],
            ..small()
        };
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&cfg).unwrap();
        assert_eq!(a.csv, b.csv);
        let rows = read_csv(a.csv.as_bytes()).unwrap();
        let seeds = cfg.sequence_seeds();
        let keys: Vec<(u64, String, String)> = rows
            .iter()
            .map(|r| (r.seed, r.method.clone(), r.mode.clone()))
            .collect();
        let mut expected = Vec::new();
        for s in seeds {
            for m in ["sdf", "ff"] {
                for mode in ["fixed", "buffered-heuristic"] {
                    expected.push((s, m.to_string(), mode.to_string()));
                }
            }
        }
        assert_eq!(keys, expected);
        assert!(rows.iter().all(|r| r.time_per_object_ms == 0.0));
    }

    #[test]
    fn report_matches_recomputation() {
        let cfg = BenchConfig {
            methods: vec!["sdf".parse().unwrap(), "dbl".parse().unwrap()],
            ..small()
        };
        let c = run_campaign(&cfg).unwrap();
        let rows = read_csv(c.csv.as_bytes()).unwrap();
        let sdf: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == "sdf")
            .map(|r| r.packed_volume_cm3)
            .collect();
        let dbl: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == "dbl")
            .map(|r| r.packed_volume_cm3)
            .collect();
        let (ms, md) = (sdf.iter().sum::<f64>() / 3.0, dbl.iter().sum::<f64>() / 3.0);
        let line = c.report.line("sdf", "fixed").unwrap();
        assert_eq!(line.mean_packed_volume_cm3, ms);
        assert_eq!(line.vol_inc_pct, Some((ms - md) / md * 100.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for cfg in [
            BenchConfig {
                methods: vec![],
                ..small()
            },
            BenchConfig {
                sequences: 0,
                ..small()
            },
            BenchConfig { buffer_k: 0, ..small() },
            BenchConfig {
                fail_limit: 0,
                ..small()
            },
        ] {
            assert!(run_rows(&cfg).is_err());
        }
        assert!("buffered".parse::<ModeKind>().is_err());
    }

    #[test]
    fn config_round_trips_through_toml_and_json() {
        let cfg = BenchConfig {
            modes: vec![ModeKind::Fixed, ModeKind::BufferedVolume],
            methods: vec!["sdf-balanced".parse().unwrap(), "mta+balance".parse().unwrap()],
            ..BenchConfig::default()
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<BenchConfig>(&json).unwrap(), cfg);
        let partial: BenchConfig = serde_json::from_str(r#"{"sequences": 7, "methods": ["dbl"]}"#).unwrap();
        assert_eq!(partial.sequences, 7);
        assert_eq!(partial.objects_per_sequence, 50);
        assert!(serde_json::from_str::<BenchConfig>(r#"{"sequencez": 7}"#).is_err());
    }

    #[test]
    fn ablation_arms_zero_their_terms() {
        let h = HeuristicConfig::default();
        assert_eq!(AblationArm::NoDistance.apply(h).alpha, 0.0);
        let b = AblationArm::NoDistanceRegularity.apply(h);
        assert_eq!((b.alpha, b.beta, b.gamma), (0.0, 0.0, 1.0));
        assert_eq!(AblationArm::NoBalance.apply(h).delta, 0.0);
        let cfg = BenchConfig {
            modes: vec![ModeKind::BufferedHeuristic],
            ..small()
        };
        let ab = run_ablation(&cfg, &AblationArm::ALL).unwrap();
        assert_eq!(ab.lines.len(), 4);
        assert_eq!(ab.line(AblationArm::Full, "buffered-heuristic").unwrap().delta_pct, 0.0);
        assert_eq!(ab.csv.lines().count(), 1 + 4 * 3);
        assert!(ab.csv.starts_with("arm,seed,method"));
    }
}
