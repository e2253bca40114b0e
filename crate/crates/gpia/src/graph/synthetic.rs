//! Planted synthetic graphs: a binary property column, a non-property
//! column correlated with it, Gaussian filler columns, group-homophilous
//! edges, and labels driven by the non-property columns.
//!
//! Column layout: `0` property code (1 = lhs group, 0 = rhs group),
//! `1` correlated binary column, `2..` standard-normal columns.

use std::collections::HashSet;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{precondition, Result};
use crate::rng::sub_rng;

pub const PROPERTY_COL: usize = 0;
pub const CORRELATED_COL: usize = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n: usize,
    /// Probability that a node belongs to the lhs group (code 1).
    pub group_ratio: f64,
    /// The correlated column equals the property code with probability
    /// `(1 + rho) / 2`.
    pub rho: f64,
    /// Probability that an edge joins two nodes of the same group.
    pub homophily: f64,
    pub avg_degree: f64,
    /// Probability that a label is replaced by a different random class.
    pub label_noise: f64,
    pub classes: usize,
    /// Number of standard-normal columns after the two binary ones.
    pub extra_features: usize,
    /// Weight of the correlated column in the label score; the first two
    /// normal columns enter with weight one each.
    pub label_weight: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 2000,
            group_ratio: 0.5,
            rho: 0.8,
            homophily: 0.7,
            avg_degree: 8.0,
            label_noise: 0.05,
            classes: 2,
            extra_features: 6,
            label_weight: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        precondition(self.n >= 2, || "n must be at least 2".into())?;
        precondition(self.group_ratio > 0.0 && self.group_ratio < 1.0, || {
            format!("group_ratio {} outside (0, 1)", self.group_ratio)
        })?;
        precondition((0.0..=1.0).contains(&self.rho), || format!("rho {} outside [0, 1]", self.rho))?;
        precondition((0.0..=1.0).contains(&self.homophily), || {
            format!("homophily {} outside [0, 1]", self.homophily)
        })?;
        precondition(
            self.avg_degree > 0.0 && self.avg_degree < (self.n - 1) as f64,
            || format!("avg_degree {} outside (0, n - 1)", self.avg_degree),
        )?;
        precondition((0.0..0.5).contains(&self.label_noise), || {
            format!("label_noise {} outside [0, 0.5)", self.label_noise)
        })?;
        precondition(self.classes >= 2, || "at least two classes are required".into())?;
        Ok(())
    }
}

/// Generates a graph from `cfg`; a pure function of the config.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Graph> {
    cfg.validate()?;
    let n = cfg.n;
    let d = 2 + cfg.extra_features;
    let mut x = Array2::<f64>::zeros((n, d));

    let mut rng = sub_rng(cfg.seed, "synthetic-features", 0);
    let agree = (1.0 + cfg.rho) / 2.0;
    for i in 0..n {
        let prop = rng.random_bool(cfg.group_ratio);
        let corr = if rng.random_bool(agree) { prop } else { !prop };
        x[[i, PROPERTY_COL]] = f64::from(u8::from(prop));
        x[[i, CORRELATED_COL]] = f64::from(u8::from(corr));
        for c in 2..d {
            x[[i, c]] = StandardNormal.sample(&mut rng);
        }
    }

    let labels = planted_labels(&x, cfg);
    let edges = homophilous_edges(&x, cfg);
    Graph::new(x, labels, edges, PROPERTY_COL)?.with_num_classes(cfg.classes)
}

fn planted_labels(x: &Array2<f64>, cfg: &SyntheticConfig) -> Vec<usize> {
    let n = x.nrows();
    let score: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = cfg.label_weight * (2.0 * x[[i, CORRELATED_COL]] - 1.0);
            for c in 2..x.ncols().min(4) {
                s += x[[i, c]];
            }
            s
        })
        .collect();
    // Equal-frequency classes by score rank.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = rank * cfg.classes / n;
    }
    let mut rng = sub_rng(cfg.seed, "synthetic-labels", 0);
    for l in &mut labels {
        if rng.random_bool(cfg.label_noise) {
            let other = rng.random_range(0..cfg.classes - 1);
            *l = if other >= *l { other + 1 } else { other };
        }
    }
    labels
}

fn homophilous_edges(x: &Array2<f64>, cfg: &SyntheticConfig) -> Vec<(usize, usize)> {
    let n = x.nrows();
    let groups: [Vec<usize>; 2] = [
        (0..n).filter(|&i| x[[i, PROPERTY_COL]] == 0.0).collect(),
        (0..n).filter(|&i| x[[i, PROPERTY_COL]] == 1.0).collect(),
    ];
    let target = ((n as f64 * cfg.avg_degree / 2.0).round() as usize).min(n * (n - 1) / 2);
    let mut rng = sub_rng(cfg.seed, "synthetic-edges", 0);
    let mut seen = HashSet::with_capacity(target);
    let mut edges = Vec::with_capacity(target);
    let mut attempts = 0;
    while edges.len() < target && attempts < 50 * target.max(1) {
        attempts += 1;
        let u = rng.random_range(0..n);
        let g = x[[u, PROPERTY_COL]] as usize;
        let pool = if rng.random_bool(cfg.homophily) { &groups[g] } else { &groups[1 - g] };
        let v = if pool.is_empty() {
            rng.random_range(0..n)
        } else {
            pool[rng.random_range(0..pool.len())]
        };
        if u == v {
            continue;
        }
        let e = (u.min(v), u.max(v));
        if seen.insert(e) {
            edges.push(e);
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_one_copies_the_property_column() {
        let g = generate_synthetic(&SyntheticConfig {
            n: 300,
            rho: 1.0,
            ..SyntheticConfig::default()
        })
        .unwrap();
        assert_eq!(g.features().column(PROPERTY_COL), g.features().column(CORRELATED_COL));
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SyntheticConfig {
            n: 400,
            seed: 17,
            ..SyntheticConfig::default()
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticConfig { seed: 18, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mean_degree_and_homophily() {
        let g = generate_synthetic(&SyntheticConfig {
            n: 1000,
            avg_degree: 6.0,
            homophily: 0.9,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let mean = 2.0 * g.num_edges() as f64 / g.n() as f64;
        assert!((mean - 6.0).abs() < 0.05, "{mean}");
        let same = g
            .edges()
            .iter()
            .filter(|&&(u, v)| g.property_value(u) == g.property_value(v))
            .count() as f64
            / g.num_edges() as f64;
        assert!(same > 0.85, "{same}");
    }

    #[test]
    fn rejects_out_of_range_config() {
        for cfg in [
            SyntheticConfig { group_ratio: 0.0, ..SyntheticConfig::default() },
            SyntheticConfig { rho: 1.5, ..SyntheticConfig::default() },
            SyntheticConfig { label_noise: 0.5, ..SyntheticConfig::default() },
            SyntheticConfig { classes: 1, ..SyntheticConfig::default() },
            SyntheticConfig { avg_degree: 0.0, ..SyntheticConfig::default() },
        ] {
            assert!(generate_synthetic(&cfg).is_err());
        }
    }
}
