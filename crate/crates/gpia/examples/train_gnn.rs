//! Train GCN, GraphSAGE and GAT node classifiers on the same graph and
//! save one of them.
//!
//! Usage: train_gnn [SEED]

use gpia::attacks::node_masks;
use gpia::gnn::{forward, train, Arch, GnnConfig, GnnModel};
use gpia::graph::{generate_synthetic, SyntheticConfig};

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let g = generate_synthetic(&SyntheticConfig { n: 800, seed, ..Default::default() })?;
    let (train_mask, test_mask) = node_masks(g.n(), 0.7, seed);
    for arch in [Arch::Gcn, Arch::Sage, Arch::Gat] {
        let cfg = GnnConfig { arch, seed, ..Default::default() };
        let (model, report) = train(&g, &cfg, &train_mask, &test_mask)?;
        let e = report.best_epoch;
        println!(
            "{:<9} {} params, {} epochs ({:?}), train acc {:.3}, test acc {:.3}",
            arch.name(),
            model.num_params(),
            report.epochs(),
            report.stop_reason,
            report.train_acc[e],
            report.test_acc[e]
        );
        if arch == Arch::Gcn {
            let path = std::env::temp_dir().join(format!("gpia-gcn-{}.json", std::process::id()));
            model.save(&path)?;
            let back = GnnModel::load(&path)?;
            let same = forward(&back, &g, None)?.o == forward(&model, &g, None)?.o;
            println!("          saved to {} and reloaded, same posteriors: {same}", path.display());
            std::fs::remove_file(path)?;
        }
    }
    Ok(())
}
