//! GPIA against the five baselines on the planted fixture: node attribute
//! inference, k-means, a meta-classifier, auxiliary summarization and the
//! loss-gap threshold.
//!
//! Usage: baselines [SEED]

use gpia::attacks::{
    baseline_aia, baseline_dsad, baseline_kmeans, baseline_lossgap, baseline_meta, execute, sample_group_ratios, AttackId,
    NoDefense,
};
use gpia::classifiers::ClassifierKind;
use gpia::features::to_matrix;
use gpia::fixture::PlantedFixture;
use gpia::graph::group_size_ratio;

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let fx = PlantedFixture::new(seed)?;
    let run = execute(&fx.spec(AttackId::A2), &fx.knowledge(AttackId::A2.access()), &fx.target, &fx.cfg, seed, &NoDefense)?;
    let d = &run.dataset;
    let (xtr, xte) = (to_matrix(&d.train)?, to_matrix(&d.test)?);

    let aia = baseline_aia(&run.shadow, &run.target, &fx.property, &ClassifierKind::mlp(), 2000, seed)?;
    let kmeans = baseline_kmeans(&xtr, &d.train_labels, &xte, &d.test_labels, seed)?;
    let meta = baseline_meta(&xtr, &d.train_labels, &xte, &d.test_labels, &[ClassifierKind::mlp(), ClassifierKind::rf(), ClassifierKind::lr()], seed)?;
    // The adversary cannot observe the target's groups; its best summary
    // of any target is the ratio in its own partial graph.
    let known = sample_group_ratios(&run.shadow, &fx.property)?;
    let summary = group_size_ratio(&fx.partial.graph, &fx.property)?;
    let dsad = baseline_dsad(&known, &d.train_labels, &vec![summary; d.test_labels.len()], &d.test_labels, seed)?;
    let lossgap = baseline_lossgap(&run.shadow, &run.target, seed)?;

    println!("{:<22} AC {:.3}", "GPIA (A2)", run.result.accuracy);
    for r in [aia, kmeans, meta, dsad, lossgap] {
        println!("{:<22} AC {:.3}", r.attack_id, r.accuracy);
    }
    Ok(())
}
