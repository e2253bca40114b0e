//! Compare embedding aggregations, posterior aggregations, classifiers and
//! layers for the partial-graph attacks on the planted fixture.
//!
//! Usage: attack_choices [SEED]

use gpia::attacks::{run_attack, AttackId};
use gpia::classifiers::ClassifierKind;
use gpia::features::AggregationMethod;
use gpia::fixture::PlantedFixture;

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let fx = PlantedFixture::new(seed)?;
    let white = [AggregationMethod::EmbedMaxpool, AggregationMethod::EmbedMeanpool, AggregationMethod::EmbedConcat];
    let black = [AggregationMethod::PosteriorConcat, AggregationMethod::PosteriorEwd];
    let runs = white.iter().map(|&a| (AttackId::A1, a)).chain(black.iter().map(|&a| (AttackId::A2, a)));
    for (id, aggregation) in runs {
        let mut spec = fx.spec(id);
        spec.aggregation = aggregation;
        let r = run_attack(&spec, &fx.knowledge(id.access()), &fx.target, &fx.cfg, seed)?;
        println!("{id} {:<18} {:<4} AC {:.3}", r.aggregation, r.classifier, r.accuracy);
    }
    for classifier in [ClassifierKind::rf(), ClassifierKind::lr()] {
        let mut spec = fx.spec(AttackId::A2);
        spec.classifier = classifier;
        let r = run_attack(&spec, &fx.knowledge(AttackId::A2.access()), &fx.target, &fx.cfg, seed)?;
        println!("A2 {:<18} {:<4} AC {:.3}", r.aggregation, r.classifier, r.accuracy);
    }
    for layers in [vec![1], vec![2], vec![1, 2]] {
        let mut spec = fx.spec(AttackId::A1);
        spec.layers = layers.clone();
        let r = run_attack(&spec, &fx.knowledge(AttackId::A1.access()), &fx.target, &fx.cfg, seed)?;
        println!("A1 layers {layers:?} AC {:.3}", r.accuracy);
    }
    Ok(())
}
