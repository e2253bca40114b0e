//! Black-box and white-box attacks on the planted fixture.
//!
//! Usage: planted_attack [SEED]

use std::time::Instant;

use gpia::attacks::{run_attack, AttackId};
use gpia::fixture::PlantedFixture;

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let fx = PlantedFixture::new(seed)?;
    for id in [AttackId::A2, AttackId::A1] {
        let start = Instant::now();
        let r = run_attack(&fx.spec(id), &fx.knowledge(id.access()), &fx.target, &fx.cfg, seed)?;
        println!(
            "{id} {} + {}: attack accuracy {:.3}, target accuracy {:.3} ({:.1?})",
            r.aggregation,
            r.classifier,
            r.accuracy,
            r.target_accuracy.unwrap_or(f64::NAN),
            start.elapsed()
        );
    }
    Ok(())
}
