use gpia::attacks::{
    baseline_dsad, execute, run_attack, AdversaryKnowledge, AttackId, AttackSpec, Composition, NoDefense, PartialGraph,
    SamplingPlan,
};
use gpia::error::Error;
use gpia::gnn::GnnConfig;
use gpia::graph::{generate_synthetic, PropertySpec, SyntheticConfig, PROPERTY_COL};
use gpia::Graph;

fn small_target(seed: u64) -> Graph {
    generate_synthetic(&SyntheticConfig { n: 400, rho: 0.9, seed, ..Default::default() }).unwrap()
}

fn small_spec(id: AttackId) -> AttackSpec {
    let plan = SamplingPlan {
        size: 30,
        train_count: 40,
        test_count: 20,
        composition: Composition::GroupRatio { positive: 0.8, negative: 0.2 },
        ..Default::default()
    };
    AttackSpec::new(id, PropertySpec::node_majority(PROPERTY_COL, 1, 0)).with_plan(plan)
}

#[test]
fn knowledge_taxonomy_is_enforced() {
    let target = small_target(1);
    let cfg = GnnConfig::default();
    let partial = PartialGraph::from_target(&target, 0.3, 1).unwrap();
    let cases = [
        (AttackId::A1, AdversaryKnowledge::new(None, Some(target.clone()), AttackId::A1.access())),
        (AttackId::A3, AdversaryKnowledge::new(Some(partial.clone()), None, AttackId::A3.access())),
        (AttackId::A2, AdversaryKnowledge::new(Some(partial.clone()), None, AttackId::A1.access())),
        (AttackId::A5, AdversaryKnowledge::new(Some(partial), None, AttackId::A5.access())),
    ];
    for (id, k) in cases {
        let err = run_attack(&small_spec(id), &k, &target, &cfg, 0).unwrap_err();
        assert!(matches!(err.root(), Error::Knowledge { .. }), "{id}: {err}");
    }
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let target = small_target(2);
    let cfg = GnnConfig { seed: 2, ..Default::default() };
    let partial = PartialGraph::from_target(&target, 0.3, 2).unwrap();
    let k = AdversaryKnowledge::new(Some(partial), None, AttackId::A2.access());
    let spec = small_spec(AttackId::A2);
    let a = execute(&spec, &k, &target, &cfg, 7, &NoDefense).unwrap();
    let b = execute(&spec, &k, &target, &cfg, 7, &NoDefense).unwrap();
    assert_eq!(a.result, b.result);
    assert_eq!(a.result.predictions, b.result.predictions);
    assert_eq!(a.result.n_test, 20);
    assert_eq!(a.shadow.len(), 40);
    assert_eq!(a.target.len(), 20);
    let c = execute(&spec, &k, &target, &cfg, 8, &NoDefense).unwrap();
    assert_ne!(a.result.predictions, c.result.predictions);
}

#[test]
fn every_attack_runs_with_matching_knowledge() {
    let target = small_target(3);
    let shadow = generate_synthetic(&SyntheticConfig { n: 300, avg_degree: 5.0, rho: 0.9, seed: 30, ..Default::default() }).unwrap();
    let cfg = GnnConfig { seed: 3, max_epochs: 60, ..Default::default() };
    let partial = PartialGraph::from_target(&target, 0.3, 3).unwrap();
    for id in [AttackId::A1, AttackId::A2, AttackId::A3, AttackId::A4, AttackId::A5, AttackId::A6] {
        let p = id.uses_partial().then(|| partial.clone());
        let s = id.uses_shadow().then(|| shadow.clone());
        let r = run_attack(&small_spec(id), &AdversaryKnowledge::new(p, s, id.access()), &target, &cfg, 3).unwrap();
        assert!((0.0..=1.0).contains(&r.accuracy), "{id}");
        assert_eq!(r.predictions.len(), 20);
        assert!(r.predictions.iter().all(|p| p.truth <= 1 && p.predicted <= 1 && (0.0..=1.0).contains(&p.score)));
        assert_eq!(r.attack_id, id.to_string());
    }
}

#[test]
fn auxiliary_summarization_thresholds_known_ratios() {
    let r = baseline_dsad(&[0.6, 0.7, 0.3], &[1, 1, 0], &[0.8, 0.2], &[1, 0], 0).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.predictions.iter().map(|p| p.predicted).collect::<Vec<_>>(), vec![1, 0]);
    // One known flag gives a constant classifier.
    let r = baseline_dsad(&[0.6, 0.7], &[1, 1], &[0.1, 0.9], &[0, 1], 0).unwrap();
    assert_eq!(r.predictions.iter().map(|p| p.predicted).collect::<Vec<_>>(), vec![1, 1]);
}
