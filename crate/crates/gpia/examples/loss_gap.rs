//! Why attacks succeed: the train/test loss gap of models on positive and
//! negative subgraphs, attack accuracy per gap quartile, and the
//! correlation between the property and the labels.
//!
//! Usage: loss_gap [SEED]

use gpia::analysis::{gap_buckets, loss_gap_from_outputs, pearson, property_label_correlation};
use gpia::attacks::{execute, AttackId, NoDefense};
use gpia::fixture::PlantedFixture;

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let fx = PlantedFixture::new(seed)?;
    println!("property/label correlation {:.3}", property_label_correlation(&fx.target)?);

    let run = execute(&fx.spec(AttackId::A2), &fx.knowledge(AttackId::A2.access()), &fx.target, &fx.cfg, seed, &NoDefense)?;
    println!("mean loss gap, positive minus negative models: {:.4}", loss_gap_from_outputs(&run.shadow)?);

    let gaps: Vec<f64> = run.target.iter().map(|o| o.loss_gap()).collect();
    let flags: Vec<f64> = run.target.iter().map(|o| o.label() as f64).collect();
    println!("correlation of loss gap and property flag {:.3}", pearson(&gaps, &flags)?);

    let samples: Vec<(f64, bool)> =
        gaps.iter().zip(&run.result.predictions).map(|(&g, p)| (g, p.truth == p.predicted)).collect();
    for b in gap_buckets(&samples)? {
        println!("{:<9} {:>3} samples, mean gap {:>8.4}, AC {:.3}", b.bucket, b.count, b.mean_gap, b.accuracy);
    }
    Ok(())
}
