use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"
    "graph": {"synthetic": {"n": 300, "seed": 2}},
    "partial": {"fraction": 0.3},
    "property": {"level": "node", "lhs": 1, "rhs": 0, "comparator": ">", "property_col": 0},
    "seed": 4
"#;

const SMALL_PLAN: &str = r#"{"size": 20, "train_count": 20, "test_count": 10}"#;

fn gpia(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpia")).args(args).env("GPIA_OUT", out).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, format!("{{{BASE}, {body}}}")).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_field_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), r#""attacks": [{"id": "A2"}], "atacks": []"#);
    let o = gpia(&["attack", "--config", &c], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("atacks"), "{}", stderr(&o));
}

#[test]
fn every_violation_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), r#""attacks": [{"id": "A3"}], "sweep": {"noise_scales": [0.0], "depths": [9]}"#);
    let o = gpia(&["sweep", "--config", &c], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("A3 needs a shadow graph"), "{e}");
    assert!(e.contains("noise_scales"), "{e}");
    assert!(e.contains("depths"), "{e}");
}

#[test]
fn missing_graph_directory_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("config.json");
    std::fs::write(
        &p,
        r#"{"graph": {"path": "nowhere"}, "property": {"level": "node", "lhs": 1, "rhs": 0, "comparator": ">", "property_col": 0}}"#,
    )
    .unwrap();
    let o = gpia(&["analyze", "correlation", "--config", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("edges.tsv"));
}

#[test]
fn bad_usage_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gpia(&["analyze", "nonsense", "--config", "x.json"], dir.path()).status.code(), Some(2));
    assert_eq!(gpia(&["frobnicate"], dir.path()).status.code(), Some(2));
    let c = write_config(dir.path(), r#""attacks": []"#);
    assert_eq!(gpia(&["attack", "--config", &c], dir.path()).status.code(), Some(2));
}

#[test]
fn synth_then_train_then_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), r#""attacks": []"#);
    let graph = dir.path().join("graph");
    let o = gpia(&["synth", "--config", &c, "--out", graph.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(graph.join("edges.tsv").is_file() && graph.join("features.csv").is_file());

    let model = dir.path().join("models/gcn.json");
    let o = gpia(
        &["train", "--graph", graph.to_str().unwrap(), "--arch", "sage", "--layers", "3", "--seed", "1", "--out", model.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = gpia::gnn::GnnModel::load(&model).unwrap();
    assert_eq!(m.depth(), 3);
    assert_eq!(m.arch(), gpia::gnn::Arch::Sage);
    assert!(dir.path().join("models/manifest.json").is_file());

    let out = dir.path().join("corr");
    let o = gpia(&["analyze", "correlation", "--config", &c], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("correlation.csv")).unwrap();
    assert!(text.starts_with("property_col,label_correlation\n0,"));
}

#[test]
fn sweep_rows_follow_the_cross_product() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        &format!(
            r#""attacks": [{{"id": "A2", "plan": {SMALL_PLAN}}}], "sweep": {{"noise_scales": [0.1, 0.5, 1, 5, 10], "seeds": [1, 2]}}"#
        ),
    );
    let out = dir.path().join("out");
    let o = gpia(&["sweep", "--config", &c, "--jobs", "2"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "point,attack_id,depth,mix_ratio,group_ratio,method,param,attack_acc,target_acc,seed,config_hash");
    assert_eq!(lines.len(), 1 + 5 * 2);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    assert!(lines[1..].iter().all(|l| l.ends_with(hash)));
    assert_eq!(manifest["seeds"], serde_json::json!([1, 2]));
    assert_eq!(manifest["failures"], serde_json::json!([]));
}

#[test]
fn attack_and_defend_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        &format!(
            r#""attacks": [{{"id": "A2", "plan": {SMALL_PLAN}}}, {{"id": "A1", "plan": {SMALL_PLAN}}}],
               "defenses": [{{"method": "label-only"}}, {{"method": "truncation", "r": 0.1}}]"#
        ),
    );
    let out = dir.path().join("out");
    assert!(gpia(&["attack", "--config", &c], &out).status.success());
    for f in ["results.csv", "attack-A1.json", "attack-A2.json", "predictions-A1.csv", "predictions-A2.csv", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let preds = std::fs::read_to_string(out.join("predictions-A2.csv")).unwrap();
    assert_eq!(preds.lines().count(), 1 + 10);

    assert!(gpia(&["defend", "--config", &c], &out).status.success());
    let text = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "method,param,attack_id,attack_acc,target_acc,seed,config_hash");
    // Each defense runs only against the attacks it applies to.
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("label-only,,A2,"));
    assert!(rows[2].starts_with("truncation,0.1,A1,"));
}

#[test]
fn config_hash_ignores_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(&a, r#"{"graph": {"synthetic": {"n": 300, "seed": 2}}, "seed": 1, "property": {"level": "node", "lhs": 1, "rhs": 0, "comparator": ">", "property_col": 0}}"#).unwrap();
    std::fs::write(&b, r#"{"property": {"property_col": 0, "comparator": ">", "rhs": 0, "lhs": 1, "level": "node"}, "seed": 1, "graph": {"synthetic": {"seed": 2, "n": 300}}}"#).unwrap();
    let ha = gpia::experiment::Experiment::load(&a).unwrap();
    let hb = gpia::experiment::Experiment::load(&b).unwrap();
    assert_eq!(ha.config_hash(), hb.config_hash());
}
