//! Subgraph sampling, densification and constrained train/test splitting.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::property::{count_groups, evaluate_from_values, Group, Level, PropertySpec};
use super::{induced_edges, Graph};
use crate::error::{precondition, Error, Result};
use crate::rng::{sub_rng, sub_seed};

/// Attempts allowed per requested sample before giving up.
pub const ATTEMPTS_PER_SAMPLE: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFlag {
    Positive,
    Negative,
}

impl SampleFlag {
    pub fn from_bool(b: bool) -> Self {
        if b {
            SampleFlag::Positive
        } else {
            SampleFlag::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == SampleFlag::Positive
    }

    pub fn label(self) -> usize {
        usize::from(self.is_positive())
    }
}

/// A node subset of a parent graph with its (local) edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgraphSample {
    /// Sorted parent node ids; local node `i` is `node_ids[i]`.
    pub node_ids: Vec<usize>,
    /// Local edges: the induced edges plus any densification edges.
    pub edges: Vec<(usize, usize)>,
    pub parent_id: u64,
    pub flag: SampleFlag,
}

impl SubgraphSample {
    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    /// The sample as a standalone graph.
    pub fn materialize(&self, parent: &Graph) -> Result<Graph> {
        parent.materialize(&self.node_ids, self.edges.clone())
    }

    /// Edges expressed with parent ids, as `(min, max)` pairs.
    pub fn parent_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(a, b)| {
            let (u, v) = (self.node_ids[a], self.node_ids[b]);
            (u.min(v), u.max(v))
        })
    }

    /// Re-evaluates the property on this sample.
    pub fn evaluate(&self, parent: &Graph, p: &PropertySpec) -> bool {
        let values: Vec<i64> = self.node_ids.iter().map(|&i| parent.property_value(i)).collect();
        evaluate_from_values(&values, &self.edges, p)
    }
}

/// Content fingerprint used as a sample's `parent_id`.
pub fn graph_fingerprint(g: &Graph) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    mix(g.n() as u64);
    for &(u, v) in g.edges() {
        mix(u as u64);
        mix(v as u64);
    }
    for &x in g.features().iter() {
        mix(x.to_bits());
    }
    h
}

fn check_request(g: &Graph, count: usize, size: usize, p: &PropertySpec) -> Result<()> {
    precondition(count >= 1, || "count must be at least 1".into())?;
    precondition(size >= 1 && size <= g.n(), || {
        format!("sample size {size} must be in [1, {}]", g.n())
    })?;
    count_groups(g, p).map(|_| ())
}

/// Draws `count` node-induced subgraphs of `size` nodes whose property flag
/// equals `want`, by rejection sampling over uniform node subsets. Sample
/// `i` uses its own sub-seed, so the output does not depend on scheduling.
pub fn sample_subgraphs(
    g: &Graph,
    count: usize,
    size: usize,
    want: SampleFlag,
    p: &PropertySpec,
    seed: u64,
) -> Result<Vec<SubgraphSample>> {
    check_request(g, count, size, p)?;
    let parent_id = graph_fingerprint(g);
    let values = g.property_column();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(seed, "uniform-sample", i as u64);
            for _ in 0..ATTEMPTS_PER_SAMPLE {
                let mut ids = index::sample(&mut rng, g.n(), size).into_vec();
                ids.sort_unstable();
                let edges = induced_edges(g, &ids);
                let local: Vec<i64> = ids.iter().map(|&v| values[v]).collect();
                if SampleFlag::from_bool(evaluate_from_values(&local, &edges, p)) == want {
                    return Ok(SubgraphSample {
                        node_ids: ids,
                        edges,
                        parent_id,
                        flag: want,
                    });
                }
            }
            Err(Error::SamplingExhausted {
                index: i,
                attempts: ATTEMPTS_PER_SAMPLE,
            })
        })
        .collect()
}

/// Draws node-induced subgraphs with a fixed group composition: exactly
/// `round(size * lhs_fraction)` nodes from the lhs group and the rest from
/// the rhs group of a node-level property. Samples whose flag differs from
/// `want` are rejected as in [`sample_subgraphs`].
pub fn sample_by_group_ratio(
    g: &Graph,
    count: usize,
    size: usize,
    lhs_fraction: f64,
    want: SampleFlag,
    p: &PropertySpec,
    seed: u64,
) -> Result<Vec<SubgraphSample>> {
    check_request(g, count, size, p)?;
    precondition((0.0..=1.0).contains(&lhs_fraction), || {
        format!("lhs fraction {lhs_fraction} outside [0, 1]")
    })?;
    let (Level::Node, Group::Value(lhs), Group::Value(rhs)) = (p.level, p.lhs, p.rhs) else {
        return Err(Error::Usage(
            "group-ratio sampling needs a node-level property over two values".into(),
        ));
    };
    let lhs_pool: Vec<usize> = (0..g.n()).filter(|&i| g.property_value(i) == lhs).collect();
    let rhs_pool: Vec<usize> = (0..g.n()).filter(|&i| g.property_value(i) == rhs).collect();
    let k = (size as f64 * lhs_fraction).round() as usize;
    precondition(k <= lhs_pool.len() && size - k <= rhs_pool.len(), || {
        format!(
            "need {k} lhs and {} rhs nodes, graph has {} and {}",
            size - k,
            lhs_pool.len(),
            rhs_pool.len()
        )
    })?;
    let parent_id = graph_fingerprint(g);
    let values = g.property_column();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(seed, "ratio-sample", i as u64);
            for _ in 0..ATTEMPTS_PER_SAMPLE {
                let mut ids: Vec<usize> = index::sample(&mut rng, lhs_pool.len(), k)
                    .into_iter()
                    .map(|j| lhs_pool[j])
                    .chain(
                        index::sample(&mut rng, rhs_pool.len(), size - k)
                            .into_iter()
                            .map(|j| rhs_pool[j]),
                    )
                    .collect();
                ids.sort_unstable();
                let edges = induced_edges(g, &ids);
                let local: Vec<i64> = ids.iter().map(|&v| values[v]).collect();
                if SampleFlag::from_bool(evaluate_from_values(&local, &edges, p)) == want {
                    return Ok(SubgraphSample {
                        node_ids: ids,
                        edges,
                        parent_id,
                        flag: want,
                    });
                }
            }
            Err(Error::SamplingExhausted {
                index: i,
                attempts: ATTEMPTS_PER_SAMPLE,
            })
        })
        .collect()
}

/// Splits the nodes of `g` at random into two disjoint pools and returns
/// the subgraphs they induce (`first` gets `round(frac * n)` nodes).
/// Sampling train and test subgraphs from different pools guarantees zero
/// node and link overlap.
pub fn split_node_pools(g: &Graph, frac: f64, seed: u64) -> Result<(Graph, Graph)> {
    precondition(frac > 0.0 && frac < 1.0, || format!("pool fraction {frac} outside (0, 1)"))?;
    let mut ids: Vec<usize> = (0..g.n()).collect();
    ids.shuffle(&mut sub_rng(seed, "node-pools", 0));
    let cut = (frac * g.n() as f64).round() as usize;
    precondition(cut > 0 && cut < g.n(), || "a node pool would be empty".into())?;
    Ok((g.induced_subgraph(&ids[..cut])?, g.induced_subgraph(&ids[cut..])?))
}

/// Adds random non-duplicate edges among the sample's nodes, one at a time,
/// until its flag equals `target` or `extra_edges` have been added.
pub fn densify(
    s: &SubgraphSample,
    parent: &Graph,
    extra_edges: usize,
    p: &PropertySpec,
    target: SampleFlag,
    seed: u64,
) -> Result<SubgraphSample> {
    precondition(extra_edges >= 1, || "densify needs an edge budget of at least 1".into())?;
    let existing: HashSet<(usize, usize)> = s.edges.iter().copied().collect();
    let n = s.n();
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|e| !existing.contains(e))
        .collect();
    if candidates.is_empty() {
        return Err(Error::DensifyFailed("the subgraph is complete; no edge can be added".into()));
    }
    let mut out = s.clone();
    out.flag = SampleFlag::from_bool(out.evaluate(parent, p));
    if out.flag == target {
        return Ok(out);
    }
    candidates.shuffle(&mut sub_rng(seed, "densify", 0));
    for e in candidates.into_iter().take(extra_edges) {
        out.edges.push(e);
        out.flag = SampleFlag::from_bool(out.evaluate(parent, p));
        if out.flag == target {
            out.edges.sort_unstable();
            return Ok(out);
        }
    }
    Err(Error::DensifyFailed(format!(
        "flag still {:?} after adding {} edges",
        out.flag,
        extra_edges.min(out.edges.len() - s.edges.len())
    )))
}

/// Realized overlap between a train set and a test set of samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// Fraction of distinct test nodes that also appear in some train sample.
    pub node_overlap: f64,
    /// Number of distinct parent edges present in both sets.
    pub shared_edges: usize,
    pub train_positive: usize,
    pub train_negative: usize,
    pub test_positive: usize,
    pub test_negative: usize,
}

pub fn overlap_report(train: &[SubgraphSample], test: &[SubgraphSample]) -> OverlapReport {
    let train_nodes: HashSet<usize> = train.iter().flat_map(|s| s.node_ids.iter().copied()).collect();
    let test_nodes: HashSet<usize> = test.iter().flat_map(|s| s.node_ids.iter().copied()).collect();
    let train_edges: HashSet<(usize, usize)> = train.iter().flat_map(|s| s.parent_edges()).collect();
    let test_edges: HashSet<(usize, usize)> = test.iter().flat_map(|s| s.parent_edges()).collect();
    let shared_nodes = test_nodes.intersection(&train_nodes).count();
    let count = |set: &[SubgraphSample], f: SampleFlag| set.iter().filter(|s| s.flag == f).count();
    OverlapReport {
        node_overlap: if test_nodes.is_empty() {
            0.0
        } else {
            shared_nodes as f64 / test_nodes.len() as f64
        },
        shared_edges: test_edges.intersection(&train_edges).count(),
        train_positive: count(train, SampleFlag::Positive),
        train_negative: count(train, SampleFlag::Negative),
        test_positive: count(test, SampleFlag::Positive),
        test_negative: count(test, SampleFlag::Negative),
    }
}

#[derive(Clone, Debug)]
pub struct TrainTestSplit {
    pub train: Vec<SubgraphSample>,
    pub test: Vec<SubgraphSample>,
    pub report: OverlapReport,
}

/// Per-class train counts summing to `round(train_frac * total)`
/// (largest-remainder apportionment, ties to the positive class).
fn train_counts(pos: usize, neg: usize, train_frac: f64) -> (usize, usize) {
    let total = ((pos + neg) as f64 * train_frac).round() as usize;
    let (ep, en) = (pos as f64 * train_frac, neg as f64 * train_frac);
    let (mut tp, mut tn) = (ep.floor() as usize, en.floor() as usize);
    while tp + tn < total {
        if (ep - tp as f64 >= en - tn as f64 && tp < pos) || tn >= neg {
            tp += 1;
        } else {
            tn += 1;
        }
    }
    (tp, tn)
}

/// Class-balanced train/test split subject to overlap constraints. Tries up
/// to [`ATTEMPTS_PER_SAMPLE`] candidate splits: a plain shuffle first, then
/// greedy splits that grow the test set around a random seed sample by
/// preferring samples whose nodes are already in the test set.
pub fn split_train_test(
    samples: &[SubgraphSample],
    train_frac: f64,
    max_node_overlap: f64,
    forbid_link_overlap: bool,
    seed: u64,
) -> Result<TrainTestSplit> {
    precondition(train_frac > 0.0 && train_frac < 1.0, || {
        format!("train fraction {train_frac} outside (0, 1)")
    })?;
    let pos: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].flag.is_positive()).collect();
    let neg: Vec<usize> = (0..samples.len()).filter(|&i| !samples[i].flag.is_positive()).collect();
    let (tp, tn) = train_counts(pos.len(), neg.len(), train_frac);
    let need = [pos.len() - tp, neg.len() - tn];
    let max_node = samples.iter().flat_map(|s| s.node_ids.iter()).max().map_or(0, |&m| m + 1);

    let accept = |test_mask: &[bool]| -> Option<TrainTestSplit> {
        let train: Vec<SubgraphSample> = (0..samples.len())
            .filter(|&i| !test_mask[i])
            .map(|i| samples[i].clone())
            .collect();
        let test: Vec<SubgraphSample> = (0..samples.len())
            .filter(|&i| test_mask[i])
            .map(|i| samples[i].clone())
            .collect();
        let report = overlap_report(&train, &test);
        let ok = report.node_overlap <= max_node_overlap + 1e-12
            && (!forbid_link_overlap || report.shared_edges == 0);
        ok.then_some(TrainTestSplit { train, test, report })
    };

    for attempt in 0..ATTEMPTS_PER_SAMPLE {
        let mut rng = sub_rng(seed, "split", attempt as u64);
        let mut test_mask = vec![false; samples.len()];
        if attempt == 0 {
            for (class, k) in [(&pos, need[0]), (&neg, need[1])] {
                let mut c = class.clone();
                c.shuffle(&mut rng);
                for &i in &c[..k] {
                    test_mask[i] = true;
                }
            }
        } else {
            let mut in_test = vec![false; max_node];
            let mut remaining = need;
            let classes = [&pos, &neg];
            let start_class = if remaining[0] > 0 && (remaining[1] == 0 || rng.random_bool(0.5)) {
                0
            } else {
                1
            };
            if remaining[start_class] == 0 {
                return accept(&test_mask).ok_or_else(|| {
                    Error::SplitInfeasible("no test samples requested".into())
                });
            }
            let first = classes[start_class][rng.random_range(0..classes[start_class].len())];
            let take = |i: usize, test_mask: &mut Vec<bool>, in_test: &mut Vec<bool>| {
                test_mask[i] = true;
                for &v in &samples[i].node_ids {
                    in_test[v] = true;
                }
            };
            take(first, &mut test_mask, &mut in_test);
            remaining[start_class] -= 1;
            let jitter_seed = sub_seed(seed, "split-jitter", attempt as u64);
            while remaining[0] + remaining[1] > 0 {
                let mut best: Option<(f64, u64, usize)> = None;
                for (c, class) in classes.iter().enumerate() {
                    if remaining[c] == 0 {
                        continue;
                    }
                    for &i in class.iter() {
                        if test_mask[i] {
                            continue;
                        }
                        let s = &samples[i];
                        let inside = s.node_ids.iter().filter(|&&v| in_test[v]).count();
                        let score = inside as f64 / s.n().max(1) as f64;
                        let tie = sub_seed(jitter_seed, "tie", i as u64);
                        if best.is_none_or(|(bs, bt, _)| score > bs || (score == bs && tie < bt)) {
                            best = Some((score, tie, i));
                        }
                    }
                }
                let (_, _, i) = best.expect("remaining counts are bounded by class sizes");
                remaining[usize::from(!samples[i].flag.is_positive())] -= 1;
                take(i, &mut test_mask, &mut in_test);
            }
        }
        if let Some(split) = accept(&test_mask) {
            return Ok(split);
        }
    }
    Err(Error::SplitInfeasible(format!(
        "no split with node overlap <= {max_node_overlap}{} found in {ATTEMPTS_PER_SAMPLE} attempts",
        if forbid_link_overlap { " and no shared links" } else { "" }
    )))
}
