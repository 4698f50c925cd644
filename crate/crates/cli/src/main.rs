use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use binpack_core::bench::{run_ablation, run_campaign, AblationArm, BenchConfig, ModeKind};
use binpack_core::trace::{heightmap_dumps, render_trace};
use binpack_core::{load_object, pack, save_object, EngineConfig, MethodSpec, ObjectSequence};

#[derive(Parser)]
#[command(name = "binpack", version, about = "Heightmap and distance-field 3D bin packing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pack one sequence and print its step trace.
    Pack(PackArgs),
    /// Run every method and mode over a seeded sequence set and write CSV rows.
    Bench(BenchArgs),
    /// Rerun the distance-field method with objective terms switched off.
    Ablate(BenchArgs),
    /// Write a generated sequence as object documents.
    GenObjects(GenArgs),
}

/// Settings shared by all subcommands; each overrides the config file.
#[derive(Args, Clone, Default)]
struct Common {
    /// TOML file holding a campaign configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Container cells along x, y, z.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    cells: Option<Vec<usize>>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Buffer size for buffered modes.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    fail_limit: Option<usize>,
    /// Objects per sequence.
    #[arg(long)]
    objects_per_sequence: Option<usize>,
    /// Recompute everything each step instead of updating incrementally.
    #[arg(long)]
    full_recompute: bool,
}

#[derive(Args)]
struct PackArgs {
    #[command(flatten)]
    common: Common,
    /// Sequence seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "sdf")]
    method: String,
    #[arg(long, default_value = "fixed")]
    mode: String,
    /// Directory of object documents to pack in file-name order instead of a generated sequence.
    #[arg(long)]
    objects: Option<PathBuf>,
    /// Directory for per-step heightmap dumps.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    /// Print the result as JSON instead of the trace.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated method tags.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Comma-separated modes: fixed, buffered-volume, buffered-heuristic.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    #[arg(long)]
    sequences: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fill the per-object timing column.
    #[arg(long)]
    timing: bool,
    /// Where to write the aggregate report (stderr when absent).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn load_config(common: &Common) -> Result<BenchConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => BenchConfig::default(),
    };
    if let Some(c) = &common.cells {
        cfg.grid.cells_x = c[0];
        cfg.grid.cells_y = c[1];
        cfg.grid.cells_z = c[2];
    }
    let h = &mut cfg.heuristic;
    for (slot, v) in [
        (&mut h.alpha, common.alpha),
        (&mut h.beta, common.beta),
        (&mut h.gamma, common.gamma),
        (&mut h.delta, common.delta),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if let Some(t) = common.tau {
        cfg.tsdf.tau = t;
    }
    if let Some(k) = common.k {
        cfg.buffer_k = k;
    }
    if let Some(f) = common.fail_limit {
        cfg.fail_limit = f;
    }
    if let Some(n) = common.objects_per_sequence {
        cfg.objects_per_sequence = n;
    }
    if common.full_recompute {
        cfg.incremental = false;
    }
    Ok(cfg)
}

fn bench_config(args: &BenchArgs) -> Result<BenchConfig> {
    let mut cfg = load_config(&args.common)?;
    if let Some(ms) = &args.methods {
        cfg.methods = ms.iter().map(|m| m.parse::<MethodSpec>()).collect::<Result<_, _>>()?;
    }
    if let Some(ms) = &args.modes {
        cfg.modes = ms.iter().map(|m| m.parse::<ModeKind>()).collect::<Result<_, _>>()?;
    }
    if let Some(n) = args.sequences {
        cfg.sequences = n;
    }
    if let Some(s) = args.master_seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.display().to_string());
    }
    if args.timing {
        cfg.timing = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_report(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

/// The configuration next to the CSV, so results carry their provenance.
fn write_provenance(cfg: &BenchConfig) -> Result<()> {
    if let Some(out) = &cfg.output {
        let path = format!("{out}.config.toml");
        fs::write(&path, toml::to_string(cfg)?).with_context(|| format!("writing {path}"))?;
    }
    Ok(())
}

fn load_objects(dir: &Path, cfg: &BenchConfig) -> Result<ObjectSequence> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .json object documents in {}", dir.display());
    }
    let mut objects = Vec::with_capacity(paths.len());
    for p in paths {
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let model = load_object(&text, Some(&cfg.grid)).with_context(|| format!("loading {}", p.display()))?;
        objects.push(Arc::new(model));
    }
    Ok(ObjectSequence::new(0, objects))
}

fn cmd_pack(args: PackArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let method: MethodSpec = args.method.parse()?;
    let mode = args.mode.parse::<ModeKind>()?.with_k(cfg.buffer_k);
    let engine = EngineConfig {
        record_log: true,
        ..cfg.engine()
    };
    engine.validate()?;
    let seq = match &args.objects {
        Some(dir) => load_objects(dir, &cfg)?,
        None => {
            cfg.generator.validate(&cfg.grid)?;
            cfg.sequence(args.seed)?
        }
    };
    let run = pack(&seq, method, mode, &engine)?;
    if let Some(dir) = &args.dump_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, text) in heightmap_dumps(&run) {
            fs::write(dir.join(&name), text).with_context(|| format!("writing {name}"))?;
        }
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&run.result)?);
    } else {
        print!("{}", render_trace(&run));
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let cfg = bench_config(&args)?;
    let campaign = run_campaign(&cfg)?;
    write_or_print(cfg.output.as_deref().map(Path::new), &campaign.csv)?;
    write_provenance(&cfg)?;
    write_report(args.report.as_deref(), &campaign.report.render())
}

fn cmd_ablate(args: BenchArgs) -> Result<()> {
    let mut cfg = bench_config(&args)?;
    if args.modes.is_none() {
        cfg.modes = vec![ModeKind::Fixed, ModeKind::BufferedHeuristic];
    }
    let ab = run_ablation(&cfg, &AblationArm::ALL)?;
    write_or_print(cfg.output.as_deref().map(Path::new), &ab.csv)?;
    write_provenance(&cfg)?;
    write_report(args.report.as_deref(), &ab.render())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    cfg.generator.validate(&cfg.grid)?;
    let seq = cfg.sequence(args.seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for (i, m) in seq.objects.iter().enumerate() {
        let path = args.out.join(format!("{i:03}-{}.json", m.name()));
        fs::write(&path, save_object(m, Some(&cfg.grid))).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("wrote {} objects to {}", seq.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let outcome = match Cli::parse().command {
        Command::Pack(a) => cmd_pack(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::GenObjects(a) => cmd_gen(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
