//! Generate a planted graph, evaluate a group property on it and on sampled
//! subgraphs, and round-trip it through the on-disk format.
//!
//! Usage: synthetic_graph [SEED]

use gpia::graph::{
    count_groups, evaluate_property, generate_synthetic, group_size_ratio, load_graph_dir, sample_by_group_ratio,
    write_graph, PropertySpec, SampleFlag, SyntheticConfig, PROPERTY_COL,
};

fn main() -> gpia::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = SyntheticConfig { n: 1000, group_ratio: 0.6, seed, ..Default::default() };
    let g = generate_synthetic(&cfg)?;
    println!("{} nodes, {} edges, {} features, {} classes", g.n(), g.num_edges(), g.feature_dim(), g.num_classes());

    let node = PropertySpec::node_majority(PROPERTY_COL, 1, 0);
    let link = PropertySpec::link_homophily(PROPERTY_COL);
    let (lhs, rhs) = count_groups(&g, &node)?;
    println!("{}: {lhs} vs {rhs} nodes, holds = {}", node.label(), evaluate_property(&g, &node)?);
    println!("{}: ratio {:.3}, holds = {}", link.label(), group_size_ratio(&g, &link)?, evaluate_property(&g, &link)?);

    for (frac, flag) in [(0.7, SampleFlag::Positive), (0.3, SampleFlag::Negative)] {
        let samples = sample_by_group_ratio(&g, 5, 40, frac, flag, &node, seed)?;
        let edges: Vec<usize> = samples.iter().map(|s| s.edges.len()).collect();
        println!("{flag:?} samples at {frac} lhs share: edges per sample {edges:?}");
    }

    let dir = tempfile_dir()?;
    write_graph(&g, &dir)?;
    let back = load_graph_dir(&dir, PROPERTY_COL)?;
    println!("round trip through {} preserved the graph: {}", dir.display(), back.edges() == g.edges());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("gpia-synthetic-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
