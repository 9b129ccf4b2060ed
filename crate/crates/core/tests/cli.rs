use std::path::Path;
use std::process::{Command, Output};

use unibeam::model::{HeadKind, NetworkParams};

fn unibeam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unibeam"))
        .args(args)
        .current_dir(dir)
        .env_remove("UNIBEAM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const TINY: &[&str] = &[
    "--m",
    "2",
    "--k",
    "2",
    "--steps",
    "12",
    "--batch",
    "8",
    "--hidden",
    "8,8",
    "--eval-every",
    "6",
    "--val-per-level",
    "5",
];

fn train(dir: &Path, head: &str, out: &str, extra: &[&str]) {
    let mut args = vec!["train", "--head", head, "--out", out];
    args.extend_from_slice(TINY);
    args.extend_from_slice(extra);
    ok(&unibeam(dir, &args));
}

#[test]
fn missing_out_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = unibeam(dir.path(), &["train", "--head", "sfl", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn out_dir_env_supplies_default_paths() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["train", "--head", "sfl"];
    args.extend_from_slice(TINY);
    let out = Command::new(env!("CARGO_BIN_EXE_unibeam"))
        .args(&args)
        .current_dir(dir.path())
        .env("UNIBEAM_OUT_DIR", "runs")
        .output()
        .unwrap();
    ok(&out);
    for f in ["sfl.params", "sfl.params.log.csv", "sfl.params.manifest.json"] {
        assert!(dir.path().join("runs").join(f).exists(), "{f}");
    }
}

#[test]
fn train_writes_params_log_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path(), "sfl", "m.params", &[]);
    let p = NetworkParams::load(dir.path().join("m.params")).unwrap();
    assert_eq!((p.m, p.k, p.head, p.input_dim()), (2, 2, HeadKind::Sfl, 9));
    let log = std::fs::read_to_string(dir.path().join("m.params.log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert!(lines[0].starts_with("step,loss,val_sr_p0,"));
    assert_eq!(lines.len(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.params.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["config"]["steps"], 12);
    assert!(manifest["code_fingerprint"].as_str().unwrap().contains("src-"));
}

#[test]
fn fixed_budget_drops_the_power_feature() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path(), "fl", "f.params", &["--fixed-p", "0"]);
    let p = NetworkParams::load(dir.path().join("f.params")).unwrap();
    assert_eq!(p.input_dim(), 2 * 2 * 2);
    assert!(!p.power_input);
}

#[test]
fn eval_has_one_row_per_level_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path(), "sfl", "s.params", &[]);
    let args = [
        "eval",
        "--model",
        "s.params",
        "--baseline",
        "wmmse",
        "--baseline",
        "zf",
        "--per-level",
        "8",
        "--out",
        "e.csv",
    ];
    let first = ok(&unibeam(dir.path(), &args));
    let second = ok(&unibeam(dir.path(), &args));
    assert_eq!(first, second);
    assert_eq!(std::fs::read_to_string(dir.path().join("e.csv")).unwrap(), first);
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], "p_db,s,wmmse,zf");
    assert_eq!(lines.len(), 8);
    let wmmse: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(wmmse.windows(2).all(|w| w[1] >= w[0]), "{wmmse:?}");
    assert!(dir.path().join("e.csv.manifest.json").exists());
}

#[test]
fn eval_rejects_mismatched_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path(), "dbl", "d.params", &[]);
    let out = unibeam(
        dir.path(),
        &[
            "eval",
            "--model",
            "d.params",
            "--m",
            "3",
            "--per-level",
            "2",
            "--out",
            "e.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension mismatch"));
}

#[test]
fn ablate_single_model_gives_one_column() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path(), "sfl", "u.params", &[]);
    let csv = ok(&unibeam(
        dir.path(),
        &[
            "ablate",
            "--universal",
            "u.params",
            "--per-level",
            "4",
            "--out",
            "a.csv",
        ],
    ));
    assert_eq!(csv.lines().next().unwrap(), "p_db,u");
    train(dir.path(), "fl", "f0.params", &["--fixed-p", "0"]);
    let csv = ok(&unibeam(
        dir.path(),
        &[
            "ablate",
            "--universal",
            "u.params",
            "--fixed",
            "0=f0.params",
            "--per-level",
            "4",
            "--out",
            "a.csv",
        ],
    ));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "p_db,u,fixed0,per_p");
    let row0: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row0[2], row0[3]);
    assert!(lines[2].ends_with(','));
}

#[test]
fn gen_data_feeds_eval() {
    let dir = tempfile::tempdir().unwrap();
    ok(&unibeam(
        dir.path(),
        &[
            "gen-data",
            "--m",
            "3",
            "--k",
            "2",
            "--per-level",
            "4",
            "--pgrid",
            "0,10",
            "--out",
            "d.txt",
        ],
    ));
    let csv = ok(&unibeam(
        dir.path(),
        &["eval", "--baseline", "mrt", "--test-set", "d.txt", "--out", "e.csv"],
    ));
    assert_eq!(csv.lines().count(), 3);
    let out = unibeam(dir.path(), &["gen-data", "--out", "x.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_reports_every_method_and_level() {
    let dir = tempfile::tempdir().unwrap();
    let csv = ok(&unibeam(
        dir.path(),
        &[
            "bench",
            "--baseline",
            "zf",
            "--baseline",
            "mrt",
            "--samples",
            "5",
            "--warmup",
            "1",
            "--pgrid",
            "0,30",
            "--out",
            "b.csv",
        ],
    ));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,p_db,mean_s,median_of_means_s,std_s");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("zf,0,"));
}
