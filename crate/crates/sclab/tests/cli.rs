use std::io::BufReader;
use std::process::Command;

use sclab::export::parse_obj;

fn sclab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sclab"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = sclab().args(["mesh", "--tol", "0", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tol"));
    let out = sclab().args(["warp"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // the report is written before the failed identity is signalled
    let out = sclab().args(["verify", "--samples", "20", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("identity (a)"));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["symmetry_pass"], serde_json::Value::Bool(true));
    let out = sclab().args(["periods", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn mesh_run_writes_geometry_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = sclab().args(["mesh", "--resolution", "8", "--copies", "2,1", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (v, f) = parse_obj(BufReader::new(std::fs::File::open(dir.path().join("surface.obj")).unwrap())).unwrap();
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("surface.json")).unwrap()).unwrap();
    assert_eq!(meta["report"]["vertices"].as_u64(), Some(v.len() as u64));
    assert_eq!(meta["report"]["faces"].as_u64(), Some(f.len() as u64));
    for key in ["params", "tolerances", "alpha_star", "t2", "t3", "versions"] {
        assert!(!meta[key].is_null(), "{key}");
    }
    // normalized by the vertical period
    let t3 = meta["t3"].as_f64().unwrap();
    assert!((meta["report"]["scale"].as_f64().unwrap() * t3 - 1.0).abs() < 1e-15);
    assert_eq!(meta["report"]["checks"]["max_closure"].as_f64().map(|c| c < 1e-8), Some(true));
}
