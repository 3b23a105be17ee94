use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kr2kh"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = run(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn kh_of_a_kinked_unknot() {
    let o = run(&["kh", "--pd", "X[1,2,2,1]"]);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("q^-1 + q\n"));
}

#[test]
fn kh_of_the_trefoil() {
    let v = json(&["kh", "--pd", "trefoil"]);
    assert_eq!(v["poincare"], "q + q^3 + t^2*q^5 + t^3*q^9");
    let table: Vec<[i64; 3]> = serde_json::from_value(v["table"].clone()).unwrap();
    assert_eq!(table, vec![[0, 1, 1], [0, 3, 1], [2, 5, 1], [3, 9, 1]]);
    assert_eq!(v["checks"], Value::Array(vec![]));
}

#[test]
fn malformed_pd_is_an_input_error() {
    let o = run(&["kh", "--pd", "X[1,2,3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed"));
    let o = run(&["kr", "--input", "/nonexistent/diagram.pd"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kr_of_the_unknot() {
    let v = json(&["kr", "--pd", "unknot"]);
    let table: Vec<[i64; 3]> = serde_json::from_value(v["table"].clone()).unwrap();
    assert_eq!(table, vec![[0, -1, 1], [0, 1, 1]]);
}

#[test]
fn kr_oracle_edges_agree_on_the_trefoil() {
    let o = run(&["kr", "--pd", "trefoil", "--oracle-edges"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("PASS oracle edges: all 12 edges agree"));
}

#[test]
fn dump_reduction_prints_one_trace_per_vertex() {
    let o = run(&["kr", "--pd", "trefoil", "--dump-reduction"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).matches("reduction at ").count(), 8);
    let o = run(&["kr", "--pd", "hopf+", "--dump-mf"]);
    assert_eq!(stdout(&o).matches("factorization at ").count(), 4);
}

#[test]
fn verify_passes_on_trefoil_and_figure8() {
    for name in ["trefoil", "figure8"] {
        let v = json(&["verify", "--pd", name, "--tau-trials", "1000"]);
        let checks = v["checks"].as_array().unwrap();
        assert!(checks.iter().all(|c| c["status"] == "pass"), "{name}: {checks:?}");
        assert!(checks.iter().any(|c| c["name"] == "tau multipath"));
    }
}

#[test]
fn verify_accepts_base_points_and_oracle_edges() {
    let o = run(&["verify", "--pd", "hopf-", "--base-point", "1", "--oracle-edges"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = run(&["verify", "--pd", "unlink2", "--base-point", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn jones_polynomials() {
    let o = run(&["jones", "--pd", "unknot"]);
    assert_eq!(stdout(&o), "q^-1 + q\n");
    let v = json(&["jones", "--pd", "trefoil"]);
    assert_eq!(v["poincare"], "q + q^3 + q^5 - q^9");
}

#[test]
fn text_and_json_report_the_same_table() {
    let v = json(&["kh", "--pd", "figure8"]);
    let text = stdout(&run(&["kh", "--pd", "figure8"]));
    assert!(text.contains(v["poincare"].as_str().unwrap()));
    let table: Vec<[i64; 3]> = serde_json::from_value(v["table"].clone()).unwrap();
    let total: i64 = table.iter().map(|r| r[2]).sum();
    assert_eq!(total, 6);
}

#[test]
fn input_file_is_read() {
    let dir = std::env::temp_dir().join(format!("kr2kh-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("hopf.pd");
    std::fs::write(&path, "X[4,1,3,2];X[1,4,2,3]\n").unwrap();
    let v = json(&["kh", "--input", path.to_str().unwrap()]);
    assert_eq!(v["poincare"], "1 + q^2 + t^2*q^4 + t^2*q^6");
    std::fs::remove_dir_all(&dir).unwrap();
}
