use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn instance(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../instances/{name}.json"))
}

fn momsos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momsos")).args(args).output().unwrap()
}

fn with_report(args: &[&str]) -> (i32, Value, String) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("r.json");
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--report", path.to_str().unwrap()]);
    let out = momsos(&all);
    let report = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    (out.status.code().unwrap(), report, String::from_utf8(out.stdout).unwrap())
}

fn write_temp(dir: &TempDir, text: &str) -> String {
    let p = dir.path().join("inst.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn cubic_disk_certify_reports_predicted_and_certified_order() {
    let p = instance("cubic_disk");
    let (code, r, stdout) = with_report(&["--instance", p.to_str().unwrap(), "--certify", "--max-order", "4"]);
    assert_eq!(code, 0);
    assert_eq!(r["predicted_order"], 2);
    assert_eq!(r["certified_order"], 2);
    assert_eq!(r["exit_code"], 0);
    assert!((r["orders"][0]["bound"].as_f64().unwrap() + 2.0 / 3.0).abs() < 1e-6);
    assert!(stdout.contains("certified at order 2"));
    assert!(stdout.contains("predicted order 2"));
}

#[test]
fn cubic_disk_oracle_agreement() {
    let p = instance("cubic_disk");
    let (code, r, _) = with_report(&["--instance", p.to_str().unwrap(), "--order", "2", "--oracle"]);
    assert_eq!(code, 0);
    let rho = r["orders"][0]["bound"].as_f64().unwrap();
    let oracle = r["oracle"]["value"].as_f64().unwrap();
    assert!((rho - oracle).abs() <= 1e-3);
    assert_eq!(r["oracle"]["agrees"], true);
}

#[test]
fn report_has_every_field_and_each_order_once() {
    let p = instance("two_basin");
    let (code, r, stdout) = with_report(&["--instance", p.to_str().unwrap(), "--certify", "--max-order", "4"]);
    assert_eq!(code, 2);
    assert!(stdout.contains("not certified"));
    for key in [
        "n_min",
        "orders",
        "certified",
        "certified_order",
        "minimizer",
        "value",
        "best_bound",
        "certificate",
        "certificate_attempts",
        "predicted_order",
        "certificate_note",
        "timings",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    let orders: Vec<u64> = r["orders"].as_array().unwrap().iter().map(|o| o["order"].as_u64().unwrap()).collect();
    assert_eq!(orders, vec![2, 3, 4]);
    for o in r["orders"].as_array().unwrap() {
        assert!(o["bound"].is_f64() && o["gap"].is_f64());
    }
    assert_eq!(r["certificate_attempts"].as_array().unwrap().len(), 3);
    assert!(r["timings"]["total_seconds"].as_f64().unwrap() >= r["timings"]["hierarchy_seconds"].as_f64().unwrap());
}

#[test]
fn default_order_range_is_n_min_plus_three() {
    let p = instance("two_basin");
    let (code, r, _) = with_report(&["--instance", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(r["orders"].as_array().unwrap().len(), 4);
    assert_eq!(r["settings"]["max_order"], 5);
}

#[test]
fn single_order_is_kept_even_below_prediction() {
    let p = instance("cubic_disk");
    let (code, r, _) = with_report(&["--instance", p.to_str().unwrap(), "--order", "3", "--certify"]);
    assert_eq!(code, 0);
    assert_eq!(r["predicted_order"], 2);
    assert_eq!(r["orders"].as_array().unwrap().len(), 1);
    assert_eq!(r["orders"][0]["order"], 3);
}

#[test]
fn missing_radius_exits_one_with_diagnostic() {
    let dir = TempDir::new().unwrap();
    let path = write_temp(&dir, r#"{"dimension": 1, "objective": [], "constraints": []}"#);
    let out = momsos(&["--instance", &path]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("radius"), "{err}");
}

#[test]
fn bad_exponent_length_exits_one() {
    let dir = TempDir::new().unwrap();
    let path = write_temp(
        &dir,
        r#"{"dimension": 2, "radius": 1, "objective": [{"exps": [1], "coef": 1}], "constraints": []}"#,
    );
    let out = momsos(&["--instance", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("objective[0].exps"));
}

#[test]
fn missing_file_and_low_order_exit_one() {
    assert_eq!(momsos(&["--instance", "/nonexistent/x.json"]).status.code(), Some(1));
    let p = instance("cubic_disk");
    let out = momsos(&["--instance", p.to_str().unwrap(), "--order", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("minimal order"));
}

#[test]
fn conflicting_flags_rejected() {
    let p = instance("cubic_disk");
    let out = momsos(&["--instance", p.to_str().unwrap(), "--order", "2", "--max-order", "3"]);
    assert!(!out.status.success());
}

#[test]
fn dump_sdp_writes_triplets() {
    let dir = TempDir::new().unwrap();
    let dump = dir.path().join("sdp.txt");
    let p = instance("cubic_disk");
    let out = momsos(&["--instance", p.to_str().unwrap(), "--order", "2", "--dump-sdp", dump.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("# order 2\n"));
    assert!(text.contains("# vars 14"));
    assert!(text.contains("# block 0 psd 6"));
    assert!(text.contains("# block 1 psd 3"));
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields.len(), 5, "{line}");
        for f in &fields[..4] {
            f.parse::<i64>().unwrap();
        }
        fields[4].parse::<f64>().unwrap();
    }
}

#[test]
fn certificate_in_report_is_machine_readable() {
    let p = instance("cubic_disk");
    let (_, r, _) = with_report(&["--instance", p.to_str().unwrap(), "--certify", "--max-order", "2"]);
    let c = &r["certificate"];
    assert_eq!(c["bounds"], serde_json::json!([1, 0]));
    let factors = c["factors"].as_array().unwrap();
    assert_eq!(factors.len(), 2);
    // L_j is d × r_j
    assert_eq!(factors[0].as_array().unwrap().len(), 2);
    let side = c["gram_blocks"][0].as_array().unwrap().len();
    assert_eq!(side, 6);
}
