use std::path::Path;
use std::process::Command;
use std::time::Duration;

use bicolor_core::algorithm::StopMetric;
use bicolor_harness::emit::{emit, read_csv, Format, CSV_HEADER};
use bicolor_harness::{HarnessError, TraceSet};

const CONFIG: &str = r#"
n = 3
kappa = 50.0
strategy = "subset_k_natural"
seeds = [1, 2]

[data]
kind = "synthetic_quadratic"
dim = 5
seed = 4

[stop]
max_iters = 400
target = 1e-4
"#;

fn bicolor(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bicolor")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_csv_for_each_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("out");
    let o = bicolor(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("seed 1:") && stdout.contains("seed 2:"), "{stdout}");

    let text = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    let rows = read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows[0].t, 0);
    assert_eq!(rows[0].total_bits_cum, 0.0);
    for seed in [1, 2] {
        let bits: Vec<f64> = rows.iter().filter(|r| r.seed == seed).map(|r| r.total_bits_cum).collect();
        assert!(bits.len() > 1);
        assert!(bits.windows(2).all(|w| w[0] <= w[1]));
    }
    assert!(out.join("aggregate.csv").exists());
}

#[test]
fn overrides_and_svg_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("svg");
    let o = bicolor(&[
        "run",
        &cfg,
        "--seed",
        "9",
        "--format",
        "svg",
        "--strategy",
        "rand_k_natural",
        "--max-iters",
        "50",
        "--alpha",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("seed 9:") && !stdout.contains("seed 1:"), "{stdout}");
    let svg = std::fs::read_to_string(out.join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}

#[test]
fn invalid_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("n = 3", "n = 0"));
    let o = bicolor(&["run", &cfg]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());

    let o = bicolor(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn empty_trace_set_is_an_error() {
    let set = TraceSet {
        fingerprint: String::new(),
        stop_metric: StopMetric::RelDist,
        gamma: 1.0,
        wall_clock: Duration::ZERO,
        traces: Vec::new(),
    };
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit(&set, Format::Csv, dir.path()), Err(HarnessError::EmptyTraceSet)));
}
