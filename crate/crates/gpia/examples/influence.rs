//! Gradient influence of nodes and edges, and per-group loss, on a graph
//! whose property groups are imbalanced.
//!
//! Usage: influence [SEED]

use gpia::analysis::{group_metrics, Influence};
use gpia::attacks::node_masks;
use gpia::gnn::GnnConfig;
use gpia::graph::{generate_synthetic, PropertySpec, SyntheticConfig, PROPERTY_COL};

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let g = generate_synthetic(&SyntheticConfig { n: 600, group_ratio: 0.3, seed, ..Default::default() })?;
    let property = PropertySpec::node_majority(PROPERTY_COL, 1, 0);
    let cfg = GnnConfig { seed, ..Default::default() };
    let (train_mask, test_mask) = node_masks(g.n(), 0.7, seed);

    let inf = Influence::new(&g, &cfg, &train_mask, &test_mask)?;
    let nodes = inf.nodes(&(0..g.n()).step_by(3).collect::<Vec<_>>())?;
    let edges = inf.edges(&g.edges().iter().copied().step_by(10).collect::<Vec<_>>())?;
    for (kind, report) in [("node", &nodes), ("edge", &edges)] {
        for m in &report.group_means {
            println!("{kind} influence, group {:<6} n={:<4} mean {:.2e}", m.group, m.count, m.mean);
        }
    }

    let d = group_metrics(inf.model(), &g, &property, &test_mask)?;
    for s in [&d.lhs, &d.rhs] {
        println!("group {} ({} test nodes): loss {:.4}, accuracy {:.3}", s.group, s.count, s.loss, s.accuracy);
    }
    println!("loss gap between groups {:.4}", d.loss_gap);
    Ok(())
}
