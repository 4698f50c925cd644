use std::process::{Command, Output};

fn binpack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binpack")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn pack_prints_one_line_per_step() {
    let o = binpack(&["pack", "--seed", "3", "--method", "dbl", "--objects-per-sequence", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# method dbl"));
    assert_eq!(lines.iter().filter(|l| l.starts_with("step")).count(), 6);
    assert!(lines.last().unwrap().starts_with("# packed 6 objects"));
}

#[test]
fn generated_documents_can_be_packed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let g = binpack(&[
        "gen-objects",
        "--seed",
        "5",
        "--objects-per-sequence",
        "4",
        "--out",
        out,
    ]);
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 4);

    // Documents hold the reference orientation only; the others are resampled on load, so the
    // run need not match the generated sequence placement for placement.
    let trace = binpack(&["pack", "--objects", out, "--method", "hm"]);
    let generated = binpack(&["pack", "--seed", "5", "--objects-per-sequence", "4", "--method", "hm"]);
    assert!(trace.status.success(), "{}", String::from_utf8_lossy(&trace.stderr));
    let names = |o: &Output| -> Vec<String> {
        stdout(o)
            .lines()
            .filter(|l| l.starts_with("step"))
            .map(|l| l.split_whitespace().nth(4).unwrap().to_string())
            .collect()
    };
    assert_eq!(names(&trace), names(&generated));

    let json = binpack(&["pack", "--objects", out, "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["objects_packed"], 4);
}

#[test]
fn dump_dir_holds_one_heightmap_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = binpack(&[
        "pack",
        "--objects-per-sequence",
        "3",
        "--dump-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 3);
}

#[test]
fn bench_writes_csv_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("runs.csv");
    let o = binpack(&[
        "bench",
        "--methods",
        "sdf,ff",
        "--sequences",
        "2",
        "--objects-per-sequence",
        "5",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("seed,method,mode,buffer_k"));
    let report = String::from_utf8(o.stderr).unwrap();
    assert!(report.contains("sdf") && report.contains("ff"));
    let sidecar = std::fs::read_to_string(dir.path().join("runs.csv.config.toml")).unwrap();
    assert!(sidecar.contains("sequences = 2"));
}

#[test]
fn ablate_reports_every_arm() {
    let o = binpack(&[
        "ablate",
        "--sequences",
        "1",
        "--objects-per-sequence",
        "4",
        "--modes",
        "fixed",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = String::from_utf8(o.stderr).unwrap();
    for arm in ["full", "no-distance", "no-distance-regularity", "no-balance"] {
        assert!(
            report.lines().any(|l| l.starts_with(&format!("{arm} "))),
            "{arm} missing:\n{report}"
        );
    }
}

#[test]
fn invalid_settings_exit_nonzero() {
    for args in [
        &["bench", "--k", "0", "--modes", "buffered-volume"][..],
        &["bench", "--methods", "nope"],
        &["pack", "--tau", "-1"],
        &["pack", "--mode", "sideways"],
        &["bench", "--config", "/nonexistent/bench.toml"],
    ] {
        let o = binpack(args);
        assert!(!o.status.success(), "{args:?} succeeded");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"), "{args:?}");
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "sequencs = 3\n").unwrap();
    let o = binpack(&["bench", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
}
