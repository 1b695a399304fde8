use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use extlab_core::verify::Goldens;
use serde_json::Value;

fn extlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extlab"))
        .args(args)
        .env("EXTLAB_OUT", out)
        .env_remove("EXTLAB_GOLDENS")
        .output()
        .expect("spawn extlab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The single run directory under `<out>/<name>`.
fn run_dir(out: &Path, name: &str) -> PathBuf {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out.join(name)).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

#[test]
fn run_list_prints_the_seven_experiments() {
    let tmp = tempfile::tempdir().unwrap();
    let o = extlab(tmp.path(), &["run", "--list"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(
        names,
        [
            "weighted_l2",
            "weighted_lq",
            "gauss_sharpness",
            "circular_means",
            "mizohata_takeuchi",
            "maximal_schrodinger",
            "furstenberg"
        ]
    );
}

#[test]
fn describe_known_and_unknown() {
    let tmp = tempfile::tempdir().unwrap();
    let o = extlab(tmp.path(), &["describe", "circular_means"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("circular_means"));
    let o = extlab(tmp.path(), &["describe", "circular"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown experiment"));
}

#[test]
fn malformed_config_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "experiment = \"weighted_l2\"\nseeds = [0]\nradii = [64.0,\n").unwrap();
    let o = extlab(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(&cfg, "experiment = \"weighted_l2\"\nseeds = [0]\nradii = [64.0]\nk = -1.0\n").unwrap();
    let o = extlab(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    fs::write(&cfg, "experiment = \"weighted_l3\"\nseeds = [0]\n").unwrap();
    let o = extlab(tmp.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(extlab(tmp.path(), &["verify", "medium"]).status.code(), Some(1));
    assert_eq!(extlab(tmp.path(), &["run"]).status.code(), Some(1));
    assert_eq!(extlab(tmp.path(), &["--jobs", "0", "list"]).status.code(), Some(1));
}

const GAUSS: &str = "experiment = \"gauss_sharpness\"\nseeds = [0]\nq0 = [3, 4, 5, 6, 7]\na = 2\n";
const GAUSS_REORDERED: &str = "a = 2\nq0 = [3, 4, 5, 6, 7]\n\nseeds = [0]\nexperiment = \"gauss_sharpness\"\n";

fn run_gauss(src: &str) -> (Value, Vec<u8>, Value) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gauss.toml");
    fs::write(&cfg, src).unwrap();
    let out = tmp.path().join("results");
    let o = extlab(&out, &["--jobs", "1", "run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let dir = run_dir(&out, "gauss_sharpness");
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    (manifest, fs::read(dir.join("data.csv")).unwrap(), summary)
}

#[test]
fn run_writes_artifacts_and_a_stable_hash() {
    let (m1, csv1, summary) = run_gauss(GAUSS);
    let (m2, csv2, _) = run_gauss(GAUSS_REORDERED);
    assert_eq!(m1["config_hash"], m2["config_hash"]);
    assert_eq!(m1["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m1["seeds"], serde_json::json!([0]));
    assert_eq!(m1["outputs"].as_array().unwrap().len(), 3);
    for key in ["command", "tool_version", "started", "finished"] {
        assert!(!m1[key].is_null(), "{key}");
    }
    assert_eq!(csv1, csv2);
    let slope = summary["summary"]["slope"].as_f64().unwrap();
    assert!((0.10..=0.23).contains(&slope), "{slope}");
}

#[test]
fn tampered_golden_fails_and_names_the_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let mut goldens = serde_json::to_value(Goldens::embedded()).unwrap();
    goldens["gauss_sharpness"]["frozen_slope"] = serde_json::json!(0.2);
    let path = tmp.path().join("goldens.json");
    fs::write(&path, serde_json::to_string_pretty(&goldens).unwrap()).unwrap();
    let o = extlab(&tmp.path().join("results"), &["verify", "fast", "--goldens", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.contains("gauss_sharpness")).unwrap();
    assert!(line.starts_with("[FAIL]"), "{line}");
    assert!(line.contains("ratio_slope_golden"), "{line}");
    assert!(text.lines().last().unwrap().contains("gauss_sharpness"));
}

#[test]
fn malformed_goldens_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("goldens.json");
    fs::write(&path, "{\n  \"broad_identities\": 3\n}\n").unwrap();
    let o = extlab(tmp.path(), &["verify", "fast", "--goldens", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn verify_fast_data_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = extlab(&out, &["verify", "fast"]);
        assert!(matches!(o.status.code(), Some(0 | 2)), "{}", stderr(&o));
        tables.push(fs::read(run_dir(&out, "verify_fast").join("data.csv")).unwrap());
    }
    assert!(!tables[0].is_empty());
    assert_eq!(tables[0], tables[1]);
}
