//! Export a two-dimensional t-SNE view of attack features for positive and
//! negative target subgraphs, written as `x,y,flag` CSV.
//!
//! Usage: feature_distribution [SEED] [OUT.csv]

use gpia::analysis::{centroid_separation, export_distribution, write_distribution_csv};
use gpia::attacks::{execute, AttackId, NoDefense};
use gpia::fixture::PlantedFixture;

fn main() -> gpia::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = args.next().unwrap_or_else(|| "distribution.csv".into());
    let fx = PlantedFixture::new(seed)?;
    for id in [AttackId::A2, AttackId::A1] {
        let run = execute(&fx.spec(id), &fx.knowledge(id.access()), &fx.target, &fx.cfg, seed, &NoDefense)?;
        let points = export_distribution(&run.dataset.test, &run.dataset.test_labels, seed)?;
        let (sep, spread) = centroid_separation(&points)?;
        println!("{id}: centroid distance {sep:.2}, mean spread {spread:.2}");
        if id == AttackId::A2 {
            write_distribution_csv(&out, &points)?;
            println!("{} points written to {out}", points.len());
        }
    }
    Ok(())
}
