use std::path::PathBuf;
use std::process::{Command, Output};

fn symcone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symcone")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("SYMCONE_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

#[test]
fn gauge_prints_both_gauges_and_distance() {
    let o = symcone(&["gauge", "--cone", "orthant", "--dim", "2", "--x", "[2,1]", "--y", "[1,3]"]);
    assert_eq!(o.status.code(), Some(0));
    golden("gauge_orthant.json", &stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["m"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["M"].as_f64(), Some(2.0));
    assert!((v["dT"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-15);
}

#[test]
fn gauge_rejects_boundary_points() {
    let o = symcone(&["gauge", "--cone", "orthant", "--dim", "2", "--x", "[0,1]", "--y", "[1,3]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not interior"));
}

#[test]
fn small_suite_report_matches_golden() {
    let o = symcone(&["suite", "--cone", "orthant", "--dim", "2", "--map", "inversion", "--trials", "3"]);
    assert_eq!(o.status.code(), Some(0));
    golden("suite_orthant2.json", &stdout(&o));
}

#[test]
fn exit_codes() {
    let ok = symcone(&["suite", "--cone", "orthant", "--dim", "6", "--map", "inversion"]);
    assert_eq!(ok.status.code(), Some(0));
    let tight = symcone(&["suite", "--cone", "psd", "--d", "3", "--map", "inversion", "--tol", "1e-12"]);
    assert_eq!(tight.status.code(), Some(1));
    let no_map = symcone(&["suite", "--cone", "orthant", "--dim", "3"]);
    assert_eq!(no_map.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_map.stderr).contains("--map"));
    let no_dim = symcone(&["suite", "--cone", "orthant", "--map", "inversion"]);
    assert_eq!(no_dim.status.code(), Some(2));
    let bad_flag = symcone(&["suite", "--cone", "orthant", "--dim", "3", "--map", "inversion", "--bogus"]);
    assert_eq!(bad_flag.status.code(), Some(2));
    let zero_trials = symcone(&["suite", "--cone", "orthant", "--dim", "3", "--map", "inversion", "--trials", "0"]);
    assert_eq!(zero_trials.status.code(), Some(2));
}

#[test]
fn reports_parse_against_the_schema() {
    let o = symcone(&["suite", "--cone", "lorentz", "--dim", "4", "--map", "conjugated", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 4);
    assert_eq!(v["suite"], "suite");
    assert_eq!(v["seed"], 42);
    assert_eq!(v["pass"], true);
    for p in v["properties"].as_array().unwrap() {
        assert_eq!(p.as_object().unwrap().len(), 5);
        assert!(p["name"].is_string() && p["trials"].is_u64() && p["tolerance"].is_f64());
        assert!(p["max_residual"].as_f64().unwrap() <= p["tolerance"].as_f64().unwrap());
    }
}

#[test]
fn reconstruct_lorentz_matches_spin_product() {
    let o = symcone(&["reconstruct", "--cone", "lorentz", "--dim", "4", "--map", "inversion"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["deviation"].as_f64().unwrap() <= 1e-7);
    let product: symcone::ProductTensor = serde_json::from_value(v["product"].clone()).unwrap();
    assert_eq!(product.dim(), 4);
}

#[test]
fn reconstruct_of_a_non_gauge_map_fails() {
    let o = symcone(&["reconstruct", "--cone", "orthant", "--dim", "3", "--map", "identity"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let args = ["suite", "--cone", "psd", "--d", "2", "--map", "conjugated", "--trials", "25", "--seed", "7"];
    let a = symcone(&args);
    let b = symcone(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = symcone(&["suite", "--cone", "psd", "--d", "2", "--map", "conjugated", "--trials", "25", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command":"suite","cone":"lorentz","dim":3,"map":"inversion","trials":10,"seed":5,"tol":1e-8}"#,
    )
    .unwrap();
    let from_file = symcone(&["suite", "--config", cfg.to_str().unwrap()]);
    let from_flags = symcone(&[
        "suite", "--cone", "lorentz", "--dim", "3", "--map", "inversion", "--trials", "10", "--seed", "5", "--tol",
        "1e-8",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);

    let overridden = symcone(&["suite", "--config", cfg.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(overridden.stdout, from_file.stdout);
}

#[test]
fn bad_configs_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("malformed.json", r#"{"cone": "orthant", "dim": 3,"#),
        ("unknown.json", r#"{"cone": "orthant", "dim": 3, "map": "inversion", "colour": 1}"#),
        ("wrong_command.json", r#"{"command": "gauge", "cone": "orthant", "dim": 3, "map": "inversion"}"#),
        ("bad_tol.json", r#"{"cone": "orthant", "dim": 3, "map": "inversion", "tol": -1}"#),
    ];
    for (name, body) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let o = symcone(&["suite", "--config", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!o.stderr.is_empty(), "{name}");
        assert!(o.stdout.is_empty(), "{name}");
    }
}

#[test]
fn map_and_cone_from_json() {
    let dir = tempfile::tempdir().unwrap();
    let cone = symcone::ConeSpec::direct_sum(vec![symcone::ConeSpec::orthant(2), symcone::ConeSpec::lorentz(3)]);
    let map = symcone::maps::conjugated_inversion(&cone, 3).unwrap();
    let path = dir.path().join("map.json");
    std::fs::write(&path, serde_json::to_string(&map).unwrap()).unwrap();
    let cone_json = serde_json::to_string(&cone).unwrap();
    let o = symcone(&["suite", "--cone", &cone_json, "--map", path.to_str().unwrap(), "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let o = symcone(&[
        "atomicity", "--cone", "psd", "--d", "2", "--map", "inversion", "--x", "[2,0,1]", "--format", "text",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("suite strong_atomicity"));
    assert!(text.trim_end().ends_with("PASS"));
}
