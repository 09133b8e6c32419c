use std::fs;
use std::process::{Command, Output};

fn lopost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lopost")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const HOM_CIRCUIT: &str = r#"{
  "modes": ["a", "b"],
  "input": [{"mode": "a", "pol": "H", "count": 1}, {"mode": "b", "pol": "H", "count": 1}],
  "elements": [{"type": "bs", "theta_deg": 45, "in": ["a", "b"], "out": ["a", "b"]}],
  "taps": [{"after": 0, "name": "mixed"}],
  "postselect": {"detectors": ["a", "b"], "count": 1}
}"#;

#[test]
fn builtin_json_reports_the_optimum() {
    let o = lopost(&["run", "--builtin", "w4", "--theta-deg", "54.7356", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["source"], "builtin");
    assert!((v["probability"].as_f64().unwrap() - 0.0740741).abs() < 1e-6);
    assert!((v["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let kets: Vec<&str> = v["conditional"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["ket"].as_str().unwrap())
        .collect();
    assert!(kets.contains(&"|H>1|H>3|H>2|V>4"));
    let mut sorted = kets.clone();
    sorted.sort();
    assert_eq!(kets, sorted);
}

#[test]
fn polarizer_variant_text_lists_three_terms() {
    let o = lopost(&["run", "--builtin", "w4-polarizer", "--theta-deg", "54.7356"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("conditional state (3 terms)"), "{text}");
    assert_eq!(text.matches("+0.577350269190").count(), 3);
}

#[test]
fn json_output_is_byte_identical_across_runs() {
    let args = ["run", "--builtin", "w4", "--theta-deg", "33.3", "--json"];
    assert_eq!(lopost(&args).stdout, lopost(&args).stdout);
}

#[test]
fn file_circuit_runs_and_reports_no_coincidences() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hom.json");
    fs::write(&path, HOM_CIRCUIT).unwrap();
    let o = lopost(&["run", "--circuit", path.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["source"], "file");
    assert!(v["probability"].as_f64().unwrap() < 1e-24);
    assert!(v["conditional"].as_array().unwrap().is_empty());
    assert_eq!(v["taps"][0]["terms"], 2);
}

#[test]
fn invalid_file_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        HOM_CIRCUIT.replace(r#""out": ["a", "b"]"#, r#""out": ["a", "z"]"#),
    )
    .unwrap();
    let o = lopost(&["run", "--circuit", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("\"z\"") || err.contains("z"), "{err}");
}

#[test]
fn missing_file_is_a_runtime_error_naming_the_path() {
    let o = lopost(&["run", "--circuit", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"));
}

#[test]
fn sweep_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = lopost(&[
        "sweep",
        "--min-deg",
        "0",
        "--max-deg",
        "90",
        "--steps",
        "91",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 92);
    let best = stdout(&o);
    let row = best.lines().nth(1).unwrap();
    let deg: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((54.0..=55.0).contains(&deg), "{row}");
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert_eq!(
            lopost(&["sweep", "--steps", "7", "--out", p.to_str().unwrap()])
                .status
                .code(),
            Some(0)
        );
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn sweep_usage_and_write_errors() {
    assert_eq!(
        lopost(&["sweep", "--steps", "1", "--out", "x.csv"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let unwritable = dir.path().join("no/such/dir/out.csv");
    assert_eq!(
        lopost(&["sweep", "--steps", "3", "--out", unwritable.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn verify_passes_by_default_and_fails_at_impossible_tolerance() {
    let ok = lopost(&["verify"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout(&ok);
    assert!(text.contains("transcription diff notes: 6"), "{text}");
    assert!(!text.contains("FAIL"));

    let strict = lopost(&["verify", "--tol", "1e-30"]);
    assert_ne!(strict.status.code(), Some(0));
    let line = stdout(&strict)
        .lines()
        .find(|l| l.contains("probability law"))
        .unwrap()
        .to_string();
    assert!(line.starts_with("FAIL"), "{line}");
}

#[test]
fn optimize_finds_the_one_third_transmittance_angle() {
    let o = lopost(&["optimize", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["theta_rad"].as_f64().unwrap() - (1.0 / 3f64.sqrt()).acos()).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["run", "--builtin", "w4"][..],
        &["run", "--builtin", "w5", "--theta-deg", "10"],
        &["run", "--circuit", "a.json", "--builtin", "w4", "--theta-deg", "10"],
        &["frobnicate"],
        &[],
    ] {
        assert_eq!(lopost(args).status.code(), Some(2), "{args:?}");
    }
}
