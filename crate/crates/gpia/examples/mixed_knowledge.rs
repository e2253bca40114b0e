//! Attacks that train on subgraphs from both the partial and a shadow graph,
//! across mixing ratios.
//!
//! Usage: mixed_knowledge [SEED]

use gpia::attacks::{run_attack, AdversaryKnowledge, AttackId, MixRatio};
use gpia::fixture::PlantedFixture;
use gpia::graph::{generate_synthetic, SyntheticConfig};

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let fx = PlantedFixture::new(seed)?;
    let shadow = generate_synthetic(&SyntheticConfig { n: 1500, avg_degree: 5.0, seed: seed + 1000, ..PlantedFixture::graph_config(seed) })?;
    for id in [AttackId::A6, AttackId::A5] {
        for ratio in ["1:4", "1:1", "4:1"] {
            let mix: MixRatio = ratio.parse()?;
            let k = AdversaryKnowledge::new(Some(fx.partial.clone()), Some(shadow.clone()), id.access()).with_mix_ratio(mix);
            let r = run_attack(&fx.spec(id), &k, &fx.target, &fx.cfg, seed)?;
            println!("{id} partial:shadow {mix:<5} AC {:.3}", r.accuracy);
        }
    }
    Ok(())
}
