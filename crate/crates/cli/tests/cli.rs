use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dqnn(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqnn"))
        .args(args)
        .env("DQNN_OUTPUT", root)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn tiny_config(dir: &Path) -> PathBuf {
    let p = dir.join("tiny.toml");
    fs::write(
        &p,
        r#"schema_version = 1
name = "tiny"
seeds = [0, 1]

[task]
kind = "regression"
n_train = 16

[model]
kind = "dqnn"
n_cir = 2
n_layers = 1
observables = { pick = "all-z" }

[train]
iterations = 5
"#,
    )
    .unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = dqnn(&["train", "/no/such/experiment.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/experiment.toml"), "{}", stderr(&o));
}

#[test]
fn unknown_override_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let o = dqnn(&["train", cfg.to_str().unwrap(), "--train.iteratons=3"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_dataset_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("wine.toml");
    fs::copy(configs().join("wine.toml"), &p).unwrap();
    let o = dqnn(&["train", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn untrained_single_seed_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let o = dqnn(&["--seed", "1", "train", cfg.to_str().unwrap(), "--train.iterations=0"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let results = fs::read_to_string(dir.path().join("tiny/results.csv")).unwrap();
    let agg = fs::read_to_string(dir.path().join("tiny/aggregate.csv")).unwrap();
    assert_eq!(results.lines().count(), 2);
    let value = |line: &str, col: usize| line.split(',').nth(col).unwrap().to_string();
    // results: value is column 5; aggregate: value is column 5 and std column 7
    let row = results.lines().nth(1).unwrap();
    let a = agg.lines().nth(1).unwrap();
    assert_eq!(value(row, 3), "1");
    assert_eq!(value(row, 5), value(a, 5));
    assert_eq!(value(a, 7), "0.0");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    for out in ["a", "b"] {
        let out_dir = dir.path().join(out);
        let o = dqnn(&["--jobs", "2", "train", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["results.csv", "aggregate.csv", "config.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let o = dqnn(&["sweep-noise", "-c", cfg.to_str().unwrap(), "--axis", "delta", "--values", "0,0.1,0.2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("sweep-delta.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "axis,value,model,metric_mean,metric_std,seeds");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("delta,0.2,DQNN,"));

    let o = dqnn(&["sweep-noise", "-c", cfg.to_str().unwrap(), "--axis", "p", "--values", "0.1", "--noise.backend=pure"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn complexity_report_matches_the_regression_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let d1 = configs().join("regression-dqnn1.toml");
    let d4 = configs().join("regression-dqnn4.toml");
    let o = dqnn(&["complexity-report", d1.to_str().unwrap(), d4.to_str().unwrap(), "--out", csv.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "config,model,n_data,n_copy,n_tot,n_lay,n_gate,n_obs,c");
    assert!(rows[1].ends_with(",12,4,48"), "{}", rows[1]);
    assert!(rows[2].ends_with(",48,1,48"), "{}", rows[2]);
}

#[test]
fn encode_prints_a_normalized_state() {
    let dir = tempfile::tempdir().unwrap();
    let o = dqnn(&["encode", "1,1,1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let amps: Vec<f64> = text.lines().skip(1).map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(amps.len(), 4);
    assert!((amps.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn universality_demo_writes_a_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = dqnn(&["universality-demo", "--target", "constant", "--n-s", "0,1", "--side", "6", "--iterations", "100"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("universality-constant.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "target,n_s,l2_error,relative_error");
    assert!(lines[1].starts_with("constant,0,1.0,"), "{}", lines[1]);
    assert_eq!(lines.len(), 3);
}

#[test]
fn gen_data_round_trips_through_the_card() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let o = dqnn(&["--seed", "3", "gen-data", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let d = dqnn::datasets::Dataset::load(&dir.path().join("tiny/data"), "train-seed-3").unwrap();
    assert_eq!(d, dqnn::datasets::gen_regression(16, 3));
}
