use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ggsp(args: &[&str], config: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ggsp"));
    cmd.args(args).env("RUST_LOG", "error");
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn denoise_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"repetitions": 2, "seed": 5, "denoise": {"input_snr_db": [0, 10]}}"#);
    let out = dir.path().join("out");
    let run = ggsp(&["denoise"], Some(&cfg), Some(&out));
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let csv = fs::read_to_string(out.join("curves.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("sweep,framework,rep,metric,value"));
    // 2 SNRs x 3 frameworks x 2 reps x 2 metrics
    assert_eq!(lines.count(), 24);

    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "denoise");
    assert_eq!(report["seed"], 5);
    assert_eq!(report["frameworks"], serde_json::json!(["GRP", "TV", "GSP"]));
    assert!(!out.join("em.json").exists());
}

#[test]
fn complete_reports_hidden_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"repetitions": 1, "complete": {"vertices": 10, "hours": 6, "days": 8, "hidden_fractions": [0.1]}}"#,
    );
    let out = dir.path().join("out");
    let run = ggsp(&["complete", "--seed", "3"], Some(&cfg), Some(&out));
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let hf = &report["hidden_fraction"]["hidden_fraction=0.1"];
    assert!(hf["mean"].as_f64().unwrap() > 0.0);
    assert!(hf["min"].as_f64().unwrap() <= hf["max"].as_f64().unwrap());
    assert_eq!(report["frameworks"], serde_json::json!(["GRP", "TV-zero", "TV-interp", "GSP"]));
}

#[test]
fn continuous_writes_em_fits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"repetitions": 1, "continuous": {"vertices": 6, "m0": 4, "samples_per_vertex": [8], "train": 4, "test": 3, "eval_points": 32, "em_max_iter": 5}}"#,
    );
    let out = dir.path().join("out");
    let run = ggsp(&["continuous", "--seed", "1"], Some(&cfg), Some(&out));
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let em: serde_json::Value = serde_json::from_slice(&fs::read(out.join("em.json")).unwrap()).unwrap();
    let fits = em.as_array().unwrap();
    // equispaced: GRP + TV + 6 TS; uniform: GRP + 6 TS
    assert_eq!(fits.len(), 15);
    assert!(fits.iter().all(|f| f["sigma2"].as_f64().unwrap() > 0.0));
    let csv = fs::read_to_string(out.join("curves.csv")).unwrap();
    assert!(csv.contains("uniform:m=8:snr_db=8.6,TS,0,relative_error,"));
    assert!(!csv.contains("uniform:m=8:snr_db=8.6,TV"));
}

#[test]
fn same_seed_gives_identical_curves_and_other_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"repetitions": 3, "denoise": {"vertices": 12, "train": 20, "test": 20}}"#);
    let read = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        assert!(ggsp(&["denoise", "--seed", seed], Some(&cfg), Some(&out)).status.success());
        fs::read(out.join("curves.csv")).unwrap()
    };
    let a = read("9", "a");
    assert_eq!(a, read("9", "b"));
    assert_ne!(a, read("10", "c"));
}

#[test]
fn config_problems_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        r#"{"repetitions": 0}"#,
        r#"{"unknown_field": 1}"#,
        r#"{"kind": "complete"}"#,
        r#"{"frameworks": ["TS"]}"#,
        "not json",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.json"), text);
        let run = ggsp(&["denoise", "--seed", "1"], Some(&cfg), Some(&out));
        assert_eq!(run.status.code(), Some(2), "{text}");
    }
    // missing seed and output directory
    assert_eq!(ggsp(&["denoise"], None, Some(&out)).status.code(), Some(2));
    assert_eq!(ggsp(&["denoise", "--seed", "1"], None, None).status.code(), Some(2));
    // geometric parameter outside (0, 1]
    let cfg = write(dir.path(), "q.json", r#"{"complete": {"missing": {"kind": "consecutive", "q": 0}}}"#);
    assert_eq!(ggsp(&["complete", "--seed", "1"], Some(&cfg), Some(&out)).status.code(), Some(2));
}

#[test]
fn data_problems_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write(dir.path(), "bad.csv", "sample,vertex,coord,value\n0,0,0,1\n0,1,0,oops\n");
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(r#"{{"data": {{"type": "csv", "path": {:?}}}}}"#, bad.display().to_string()),
    );
    let run = ggsp(&["denoise", "--seed", "1"], Some(&cfg), Some(&out));
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stderr).contains("line 3"));
}

#[test]
fn csv_denoise_with_correlation_graph() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("sample,vertex,c0,c1,c2\n");
    for s in 0..12 {
        for v in 0..6 {
            let base = ((s * 7 + v * 3) % 11) as f64;
            text.push_str(&format!("{s},{v},{},{},{}\n", base, base * 0.5 + v as f64, (s + v) as f64));
        }
    }
    let data = write(dir.path(), "wide.csv", &text);
    let cfg = write(
        dir.path(),
        "c.json",
        &format!(
            r#"{{"repetitions": 2, "graph": {{"type": "correlation", "threshold": 0.3}}, "data": {{"type": "csv", "path": {:?}, "schema": "matrix"}}}}"#,
            data.display().to_string()
        ),
    );
    let out = dir.path().join("out");
    let run = ggsp(&["denoise", "--seed", "2"], Some(&cfg), Some(&out));
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("curves.csv").exists());
}
