use gpia::attacks::{AdversaryKnowledge, AttackId, AttackSpec, PartialGraph, SamplingPlan};
use gpia::defenses::{evaluate_defense, write_defense_csv, DefenseMethod, DefenseSpec};
use gpia::error::Error;
use gpia::gnn::GnnConfig;
use gpia::graph::{generate_synthetic, PropertySpec, SyntheticConfig, PROPERTY_COL};

struct Setup {
    target: gpia::Graph,
    partial: PartialGraph,
    cfg: GnnConfig,
}

fn setup() -> Setup {
    let target = generate_synthetic(&SyntheticConfig { n: 400, seed: 5, ..Default::default() }).unwrap();
    let partial = PartialGraph::from_target(&target, 0.3, 5).unwrap();
    Setup { target, partial, cfg: GnnConfig { seed: 5, max_epochs: 60, ..Default::default() } }
}

fn spec(id: AttackId) -> AttackSpec {
    let plan = SamplingPlan { size: 25, train_count: 30, test_count: 10, ..Default::default() };
    AttackSpec::new(id, PropertySpec::node_majority(PROPERTY_COL, 1, 0)).with_plan(plan)
}

fn knowledge(s: &Setup, id: AttackId) -> AdversaryKnowledge {
    AdversaryKnowledge::new(Some(s.partial.clone()), None, id.access())
}

#[test]
fn defenses_refuse_attacks_they_do_not_apply_to() {
    let s = setup();
    let cases = [
        (AttackId::A2, DefenseMethod::Truncation { r: 0.2 }),
        (AttackId::A2, DefenseMethod::NoisyEmbedding { b: 1.0, target_layers: None }),
        (AttackId::A1, DefenseMethod::NoisyPosterior { b: 1.0 }),
        (AttackId::A1, DefenseMethod::LabelOnly {}),
    ];
    for (id, m) in cases {
        let err = evaluate_defense(&DefenseSpec::new(m), &spec(id), &knowledge(&s, id), &s.target, &s.cfg, 0).unwrap_err();
        assert!(matches!(err, Error::Usage(_)), "{err}");
    }
}

#[test]
fn defended_runs_are_reproducible_and_reported() {
    let s = setup();
    let dir = tempfile::tempdir().unwrap();
    let mut rows = Vec::new();
    for (id, m) in [
        (AttackId::A2, DefenseMethod::NoisyPosterior { b: 5.0 }),
        (AttackId::A1, DefenseMethod::Truncation { r: 0.3 }),
        (AttackId::A2, DefenseMethod::dp_from_scale(1.0)),
        (AttackId::A2, DefenseMethod::TopkPosterior { k: 1 }),
    ] {
        let d = DefenseSpec { seed: 3, ..DefenseSpec::new(m) };
        let a = evaluate_defense(&d, &spec(id), &knowledge(&s, id), &s.target, &s.cfg, 9).unwrap();
        let b = evaluate_defense(&d, &spec(id), &knowledge(&s, id), &s.target, &s.cfg, 9).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.attack_acc) && (0.0..=1.0).contains(&a.target_acc));
        rows.push(a);
    }
    let path = dir.path().join("defense.csv");
    write_defense_csv(&path, &rows).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,param,attack_id,attack_acc,target_acc,seed");
    assert!(lines[1].starts_with("noisy-posterior,5,A2,"));
    assert!(lines[3].starts_with("dp-gradient,1,A2,"));
    assert_eq!(lines.len(), 5);
}

#[test]
fn heavy_posterior_noise_hurts_the_target_model() {
    let s = setup();
    let clean = evaluate_defense(
        &DefenseSpec::new(DefenseMethod::NoisyPosterior { b: 1e-9 }),
        &spec(AttackId::A2),
        &knowledge(&s, AttackId::A2),
        &s.target,
        &s.cfg,
        1,
    )
    .unwrap();
    let noisy = evaluate_defense(
        &DefenseSpec::new(DefenseMethod::NoisyPosterior { b: 100.0 }),
        &spec(AttackId::A2),
        &knowledge(&s, AttackId::A2),
        &s.target,
        &s.cfg,
        1,
    )
    .unwrap();
    assert!(noisy.target_acc < clean.target_acc - 0.1, "{} vs {}", noisy.target_acc, clean.target_acc);
}
