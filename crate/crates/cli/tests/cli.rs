use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmlab"))
        .args(args)
        .output()
        .expect("spawn mmlab")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn write_instance(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    out_arg(&path)
}

#[test]
fn shatter_json_pattern() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mmlab(&[
        "shatter",
        "--n",
        "8",
        "--signs",
        "+-+-+-+-",
        "--json",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["result"]["n"], 8);
    assert!(tmp.path().join("certificate.json").exists());
    assert!(tmp.path().join("certificate.csv").exists());
}

#[test]
fn shatter_paper_convention() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mmlab(&[
        "shatter",
        "--signs",
        "-++-",
        "--convention",
        "paper",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn shatter_length_mismatch_is_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mmlab(&[
        "shatter",
        "--n",
        "3",
        "--signs",
        "++",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn separation_small() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mmlab(&[
        "separation",
        "--n",
        "4",
        "--trials",
        "20",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    let csv = fs::read_to_string(tmp.path().join("rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn bound_from_instance_file() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = write_instance(
        tmp.path(),
        "inst.json",
        r#"{"family":"boolean","tables":[[0,1],[1,1]]}"#,
    );
    let out = mmlab(&[
        "bound",
        "--instance",
        &inst,
        "--n",
        "16",
        "--m",
        "64",
        "--json",
        "--out",
        &out_arg(&tmp.path().join("run")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let bound = &summary["result"]["bound"];
    let total = bound["total"].as_f64().unwrap();
    let excess = summary["result"]["risk"]["excess"].as_f64().unwrap();
    assert!(excess <= total);
    for key in ["term1", "term2", "term3", "term4"] {
        assert!(bound[key].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn fit_multimodal_writes_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = write_instance(
        tmp.path(),
        "inst.json",
        r#"{"family":"sine","theta":{"value":0.3},"support":{"kind":"continuous","lower":0.2}}"#,
    );
    let run = tmp.path().join("run");
    let out = mmlab(&[
        "fit-multimodal",
        "--instance",
        &inst,
        "--out",
        &out_arg(&run),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sol: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("solution.json")).unwrap()).unwrap();
    assert!(sol["provenance"]["instance_hash"].is_string());
    assert!(run.join("labeled.csv").exists());
    assert!(run.join("unlabeled.csv").exists());
}

#[test]
fn outputs_independent_of_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, w) in [(&a, "1"), (&b, "2")] {
        let out = mmlab(&[
            "separation",
            "--n",
            "4",
            "--trials",
            "30",
            "--seed",
            "7",
            "--workers",
            w,
            "--out",
            &out_arg(dir),
        ]);
        assert!(matches!(out.status.code(), Some(0) | Some(2)));
    }
    for file in ["summary.json", "rows.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn config_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let out = mmlab(&[
        "necessity",
        "--n",
        "16",
        "--trials",
        "40",
        "--seed",
        "3",
        "--out",
        &out_arg(&first),
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    let second = tmp.path().join("second");
    let cfg = first.join("config.json");
    let out = mmlab(&[
        "necessity",
        "--config",
        &out_arg(&cfg),
        "--out",
        &out_arg(&second),
    ]);
    assert!(matches!(out.status.code(), Some(0) | Some(2)));
    assert_eq!(
        fs::read(first.join("summary.json")).unwrap(),
        fs::read(second.join("summary.json")).unwrap()
    );
}

#[test]
fn unknown_subcommand_exits_one() {
    let out = mmlab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_config_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_instance(tmp.path(), "bad.json", r#"{"n": "eight", "bogus": 1}"#);
    let out = mmlab(&[
        "separation",
        "--config",
        &cfg,
        "--out",
        &out_arg(&tmp.path().join("run")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed config"));
}

#[test]
fn missing_instance_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mmlab(&["fit-multimodal", "--out", &out_arg(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
}
