//! Command-line behaviour: exit codes, artifact sets and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn capvertex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capvertex")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect(),
        Err(_) => Vec::new(),
    };
    names.sort();
    names
}

const EVOLVE: &str = r#"{
  "kind": "Evolve",
  "support": {"type": "octant", "gammas": [1.5707963267948966, 1.5707963267948966, 1.5707963267948966]},
  "volume": 0.5,
  "refinement": 2,
  "perturbation": 0.02,
  "grad_tol": 1e-7,
  "seed": 4
}"#;

#[test]
fn evolve_writes_artifacts_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "evolve.json", EVOLVE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = capvertex(&["evolve", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let names = listing(&a);
    assert_eq!(names, ["diagnostics.csv", "final.obj", "report.json", "seed.obj", "trace.csv"]);
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n} differs between runs");
    }
    let trace = fs::read_to_string(a.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,energy,|S|,V,grad_norm,h_estimate\n"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 4);
    assert_eq!(report["converged"], true);
    let obj = fs::read_to_string(a.join("final.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("# tag ") && l.ends_with(" E0")));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "evolve.json", EVOLVE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = capvertex(&["evolve", "--config", &cfg, "--out", a.to_str().unwrap(), "--seed", "9"]);
    let ob = capvertex(&["evolve", "--config", &cfg, "--out", b.to_str().unwrap()]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    let ra: serde_json::Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(ra["seed"], 9);
    assert_ne!(fs::read(a.join("seed.obj")).unwrap(), fs::read(b.join("seed.obj")).unwrap());
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        ("syntax.json", "{\n  \"kind\": \"Classify\",\n  \"alpha\": 0.5,\n"),
        ("unknown.json", "{\n  \"kind\": \"Classify\",\n  \"alpha\": 0.5,\n  \"colour\": 3\n}"),
        ("range.json", "{\n  \"kind\": \"Classify\",\n  \"alpha\": 2.5\n}"),
        ("type.json", "{\n  \"kind\": \"Classify\",\n  \"alpha\": \"wide\"\n}"),
    ];
    for (name, text) in cases {
        let cfg = write_config(tmp.path(), name, text);
        let o = capvertex(&["classify", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("line"), "{name}: {err}");
        assert!(listing(&out).is_empty(), "{name} left artifacts");
    }
    let o = capvertex(&["classify", "--config", "/nonexistent/config.json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(listing(&out).is_empty());
}

#[test]
fn wrong_subcommand_for_kind_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "c.json", r#"{"kind": "Classify", "alpha": 0.5, "grid": 5}"#);
    let o = capvertex(&["evolve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(listing(&out).is_empty());
}

#[test]
fn inadmissible_cap_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // hydrophobic walls of a narrow wedge admit no cap
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"kind": "WedgeCap", "alpha": 0.3, "gammas": [2.9, 2.9], "h": -1.0}"#,
    );
    let o = capvertex(&["cap", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no solution"));
    assert!(listing(&out).is_empty());
}

#[test]
fn classify_and_cap_and_graph_run() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = [
        ("classify", r#"{"kind": "Classify", "alpha": 0.7853981633974483, "grid": 19}"#, vec!["classify.csv", "report.json"]),
        (
            "cap",
            r#"{"kind": "TrihedralCap", "support": {"type": "octant", "gammas": [1.2, 1.5, 1.9]}, "h": -1.0, "refinement": 2}"#,
            vec!["cap.obj", "report.json"],
        ),
        (
            "cap",
            r#"{"kind": "CylinderCap", "support": {"type": "equilateral", "inradius": 1.0, "gammas": [2.0, 2.0, 2.0], "base": 0.0}, "refinement": 2}"#,
            vec!["cap.obj", "report.json"],
        ),
        (
            "solve-graph",
            r#"{"kind": "RectanglePDE", "a": 1.0, "b": 2.0, "gammas": [1.2, 1.2, 1.2, 1.2], "grid_n": 16}"#,
            vec!["heights.csv", "report.json", "surface.obj"],
        ),
        ("verify", r#"{"kind": "Verify", "suite": "wente"}"#, vec!["report.json", "verify.csv"]),
    ];
    for (k, (cmd, text, expected)) in runs.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("c{k}.json"), text);
        let out = tmp.path().join(format!("out{k}"));
        let o = capvertex(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(listing(&out), *expected);
    }
}

#[test]
fn unconverged_evolution_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let text = EVOLVE.replace("\"grad_tol\": 1e-7", "\"grad_tol\": 1e-7,\n  \"max_iters\": 2");
    let cfg = write_config(tmp.path(), "evolve.json", &text);
    let out = tmp.path().join("out");
    let o = capvertex(&["evolve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    // a completed but failing run still records its artifacts
    assert_eq!(listing(&out), ["diagnostics.csv", "final.obj", "report.json", "seed.obj", "trace.csv"]);
}

#[test]
fn documented_examples_parse_and_match_schema() {
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs");
    let schema: serde_json::Value = serde_json::from_str(&fs::read_to_string(docs.join("config.schema.json")).unwrap()).unwrap();
    let variants = schema["oneOf"].as_array().unwrap();
    let mut seen = 0;
    for entry in fs::read_dir(docs.join("examples")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let cfg = capvertex::harness::ScenarioConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let variant = variants
            .iter()
            .find(|v| v["properties"]["kind"]["const"] == cfg.kind())
            .unwrap_or_else(|| panic!("schema lacks kind {}", cfg.kind()));
        for key in value.as_object().unwrap().keys() {
            assert!(variant["properties"].get(key).is_some(), "{}: `{key}` not in schema", path.display());
        }
        for key in variant["required"].as_array().unwrap() {
            assert!(value.get(key.as_str().unwrap()).is_some(), "{}: missing {key}", path.display());
        }
        seen += 1;
    }
    assert!(seen >= 7);
    assert_eq!(variants.len(), 7);
}
