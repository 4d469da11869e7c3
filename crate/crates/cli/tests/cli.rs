use std::path::PathBuf;
use std::process::Command;

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hdgflow-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn hdgflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hdgflow")).args(args).output().expect("running hdgflow")
}

#[test]
fn lbb_writes_csv_and_meta() {
    let dir = out_dir("lbb");
    let out = hdgflow(&["lbb", "--k", "2,4", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("lbb.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,c");
    assert_eq!(lines.len(), 3);
    let c: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!(c > 0.0);
    let meta = std::fs::read_to_string(dir.join("meta.json")).unwrap();
    assert!(meta.contains("\"case\": \"lbb\""));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sparsity_writes_json() {
    let dir = out_dir("sparsity");
    let out = hdgflow(&["sparsity", "--k", "1..2", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_to_string(dir.join("sparsity.json")).unwrap();
    assert!(json.contains("\"nnzA\"") && json.contains("\"facets\": 800"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn potential_study_writes_errors() {
    let dir = out_dir("potential");
    let out = hdgflow(&["potential", "--k", "2", "--refines", "2", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("errors.csv")).unwrap();
    assert!(csv.starts_with("level,h,ndof,cdof,L2u,rate,H1u,rate,L2p,rate"));
    assert_eq!(csv.lines().count(), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_arguments_fail() {
    assert!(!hdgflow(&["lbb", "--k", "0"]).status.success());
    let dir = out_dir("bad");
    assert!(!hdgflow(&["cyl2d", "--k", "2,3", "--out", dir.to_str().unwrap()]).status.success());
    let _ = std::fs::remove_dir_all(&dir);
    assert!(!hdgflow(&["warp"]).status.success());
}
