//! Shadow-graph attacks: the adversary trains on a structurally different
//! graph with the same planted mechanism and aligns feature lengths before
//! attacking the target.
//!
//! Usage: transfer_attack [SEED]

use gpia::attacks::{run_attack, AdversaryKnowledge, AttackId};
use gpia::features::AlignmentMethod;
use gpia::fixture::PlantedFixture;
use gpia::graph::{generate_synthetic, SyntheticConfig};

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let fx = PlantedFixture::new(seed)?;
    let shadow = generate_synthetic(&SyntheticConfig {
        n: 1500,
        avg_degree: 5.0,
        homophily: 0.6,
        seed: seed + 1000,
        ..PlantedFixture::graph_config(seed)
    })?;
    println!("shadow graph: {} nodes, {} edges", shadow.n(), shadow.num_edges());
    let alignments = [AlignmentMethod::tsne(), AlignmentMethod::pca(), AlignmentMethod::autoencoder(), AlignmentMethod::Sampling];
    for id in [AttackId::A4, AttackId::A3] {
        let k = AdversaryKnowledge::new(None, Some(shadow.clone()), id.access());
        for alignment in &alignments {
            let mut spec = fx.spec(id);
            spec.alignment = alignment.clone();
            let r = run_attack(&spec, &k, &fx.target, &fx.cfg, seed)?;
            println!("{id} {:<16} {:<12} AC {:.3}", r.aggregation, alignment.name(), r.accuracy);
        }
    }
    Ok(())
}
