use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_HF: &str = r#"
model = "hf"
lambda = 1

[grid]
n = 24
radius = 8.0
scheme = "uniform"

[potential]
coupling = 0.6
mass = 1.0

[initial]
family = "gaussian-shells"
chirp = 0.03
shells = [
  { ell = 0, center = 2.0, width = 0.9, occupation = 0.7 },
  { ell = 1, center = 2.5, width = 1.0, occupation = 0.4 },
]

[integrator]
t_final = 0.3
sample_interval = 0.05

[output]
checkpoint_every = 2
"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfcollapse")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn simulate(config: &Path, out: &Path) -> Output {
    bin(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn simulate_writes_complete_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_HF);
    let out = dir.path().join("run");
    let o = simulate(&cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trajectory.csv", "final.bin", "diagnostics.json", "manifest.json", "plots/virial_m.svg", "checkpoints/ckpt_00000.bin"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    for c in ["trace_norm", "pair_norm", "lift_norm", "exchange_block_norm"] {
        assert!(manifest["constants"][c].is_f64(), "manifest lacks {c}");
    }
    assert!(manifest["versions"]["hfcollapse"].is_string());
    assert_eq!(manifest["coupling_used"].as_f64(), Some(0.6));
    for a in manifest["artifacts"].as_array().unwrap() {
        assert!(out.join(a.as_str().unwrap()).exists(), "listed artifact {a} missing");
    }
    let header = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,dt,energy,trace,kinetic,l2,"));

    let r = bin(&["report", "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    assert!(out.join("report.md").exists());
}

#[test]
fn rerun_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_HF);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&cfg, &a).status.success());
    assert!(simulate(&cfg, &b).status.success());
    for f in ["trajectory.csv", "final.bin", "manifest.json", "diagnostics.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn hfb_without_pairing_matches_hf() {
    let dir = tempfile::tempdir().unwrap();
    let hf = write_config(dir.path(), "hf.toml", SMALL_HF);
    let hfb_text = SMALL_HF.replace("model = \"hf\"", "model = \"hfb\"\nzero_pairing = true");
    let hfb = write_config(dir.path(), "hfb.toml", &hfb_text);
    let (a, b) = (dir.path().join("hf"), dir.path().join("hfb"));
    assert!(simulate(&hf, &a).status.success());
    assert!(simulate(&hfb, &b).status.success());
    let (x, y) = (csv_rows(&a.join("trajectory.csv")), csv_rows(&b.join("trajectory.csv")));
    assert_eq!(x.len(), y.len());
    // t, energy, trace, kinetic, l2, virial_m, virial_a
    for (rx, ry) in x.iter().zip(&y) {
        for c in [0, 2, 3, 4, 5, 6, 7] {
            assert!((rx[c] - ry[c]).abs() <= 1e-8 * rx[c].abs().max(1.0), "column {c}: {} vs {}", rx[c], ry[c]);
        }
        assert_eq!(ry[8], 0.0, "pairing mass must stay zero");
    }
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let bad = write_config(dir.path(), "bad.toml", &SMALL_HF.replace("coupling = 0.6", "coupling = 0.6\nkappa = 2"));
    assert_eq!(simulate(&bad, &out).status.code(), Some(1));
    let hfb = write_config(dir.path(), "hfb.toml", &SMALL_HF.replace("model = \"hf\"", "model = \"hfb\""));
    assert_eq!(simulate(&hfb, &out).status.code(), Some(1));
    let neg = write_config(dir.path(), "neg.toml", &SMALL_HF.replace("coupling = 0.6", "coupling = -1.0"));
    assert_eq!(simulate(&neg, &out).status.code(), Some(1));
    assert_eq!(simulate(&dir.path().join("missing.toml"), &out).status.code(), Some(1));
}

#[test]
fn empty_sweep_gives_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_HF);
    let out = dir.path().join("sweep");
    let o = bin(&["sweep", "--config", cfg.to_str().unwrap(), "--axis", "kappa", "--values", "", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
}

#[test]
fn sweep_records_each_value_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL_HF);
    let out = dir.path().join("sweep");
    let o = bin(&[
        "sweep", "--config", cfg.to_str().unwrap(), "--axis", "lambda_cutoff", "--values", "2,0,1",
        "--threads", "3", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("0,lambda_cutoff,2.0"));
    assert!(rows[1].contains("error"), "shell with l = 1 needs lambda >= 1: {}", rows[1]);
    assert!(rows[2].contains("survived"));
    assert!(bin(&["report", "--out", out.to_str().unwrap()]).status.success());
}

#[test]
fn corrupted_gaunt_entry_fails_validation() {
    let o = bin(&["validate", "--level", "fast", "--corrupt-gaunt", "2,2,2"]);
    assert_eq!(o.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let line = stdout.lines().find(|l| l.starts_with("gaunt-table")).expect("gaunt-table line");
    assert!(line.contains("FAIL"), "{line}");
}

#[test]
fn fast_validation_passes() {
    let o = bin(&["validate", "--level", "fast"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.contains(" PASS ")), "{stdout}");
}
