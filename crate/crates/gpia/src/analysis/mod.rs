//! Diagnostics: influence scores, per-group loss and accuracy, loss gaps,
//! correlation, gap-bucket tables and feature-distribution export.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::ModelOutput;
use crate::error::{precondition, Error, Result};
use crate::features::{to_matrix, tsne, FeatureVector, TsneParams};
use crate::gnn::{forward, gradient_vector, train, GnnConfig, GnnModel};
use crate::graph::{Graph, Group, Level, PropertySpec};
use crate::rng::sub_rng;

/// `1 - cos(a, b)`, in `[0, 2]`. Equal vectors are at distance 0 even when
/// zero; a zero vector is orthogonal to any other.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("vectors of lengths {} and {}", a.len(), b.len())));
    }
    if a == b {
        return Ok(0.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - dot / (na * nb)).clamp(0.0, 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Node,
    Edge,
}

/// Gradient-based influence against one trained model: how far the
/// training-loss gradient at the model's parameters moves when a node or
/// edge is removed from the graph.
pub struct Influence<'a> {
    g: &'a Graph,
    model: GnnModel,
    mask: Vec<usize>,
    base: Vec<f64>,
}

impl<'a> Influence<'a> {
    /// Trains on `train_mask` (early stopping on `test_mask`) and records
    /// the full-graph gradient at the returned parameters.
    pub fn new(g: &'a Graph, cfg: &GnnConfig, train_mask: &[usize], test_mask: &[usize]) -> Result<Self> {
        let (model, _) = train(g, cfg, train_mask, test_mask)?;
        Self::from_model(g, model, train_mask)
    }

    pub fn from_model(g: &'a Graph, model: GnnModel, train_mask: &[usize]) -> Result<Self> {
        let base = gradient_vector(&model, g, train_mask)?;
        Ok(Influence { g, model, mask: train_mask.to_vec(), base })
    }

    pub fn model(&self) -> &GnnModel {
        &self.model
    }

    /// Influence of node `v`: the gradient on the graph without `v`, over
    /// the training nodes that remain.
    pub fn node(&self, v: usize) -> Result<f64> {
        let n = self.g.n();
        if v >= n {
            return Err(Error::NodeRange { id: v, n });
        }
        let keep: Vec<usize> = (0..n).filter(|&i| i != v).collect();
        let mask: Vec<usize> = self.mask.iter().filter(|&&i| i != v).map(|&i| if i > v { i - 1 } else { i }).collect();
        precondition(!mask.is_empty(), || format!("removing node {v} empties the training mask"))?;
        let sub = self.g.induced_subgraph(&keep)?;
        cosine_distance(&gradient_vector(&self.model, &sub, &mask)?, &self.base)
    }

    /// Influence of the edge `(u, v)`.
    pub fn edge(&self, u: usize, v: usize) -> Result<f64> {
        let key = (u.min(v), u.max(v));
        precondition(self.g.has_edge(u, v), || format!("no edge ({u}, {v})"))?;
        let sub = self.g.with_edges(self.g.edges().iter().copied().filter(|&e| e != key))?;
        cosine_distance(&gradient_vector(&self.model, &sub, &self.mask)?, &self.base)
    }

    /// Scores for `nodes`, grouped by property value.
    pub fn nodes(&self, nodes: &[usize]) -> Result<InfluenceReport> {
        let scores = nodes
            .par_iter()
            .map(|&v| {
                Ok(InfluenceScore { u: v, v: None, group: self.g.property_value(v).to_string(), score: self.node(v)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InfluenceReport::new(ElementKind::Node, scores))
    }

    /// Scores for `edges`, grouped by the endpoints' shared value or
    /// `mixed`.
    pub fn edges(&self, edges: &[(usize, usize)]) -> Result<InfluenceReport> {
        let scores = edges
            .par_iter()
            .map(|&(u, v)| {
                let (a, b) = (self.g.property_value(u), self.g.property_value(v));
                let group = if a == b { a.to_string() } else { "mixed".into() };
                Ok(InfluenceScore { u, v: Some(v), group, score: self.edge(u, v)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InfluenceReport::new(ElementKind::Edge, scores))
    }
}

/// Influence of node `v` on a model trained with `cfg`.
pub fn influence_node(g: &Graph, v: usize, cfg: &GnnConfig, train_mask: &[usize], test_mask: &[usize]) -> Result<f64> {
    Influence::new(g, cfg, train_mask, test_mask)?.node(v)
}

/// Influence of edge `(u, v)` on a model trained with `cfg`.
pub fn influence_edge(
    g: &Graph,
    (u, v): (usize, usize),
    cfg: &GnnConfig,
    train_mask: &[usize],
    test_mask: &[usize],
) -> Result<f64> {
    Influence::new(g, cfg, train_mask, test_mask)?.edge(u, v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceScore {
    pub u: usize,
    /// Second endpoint for edges.
    pub v: Option<usize>,
    pub group: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub group: String,
    pub count: usize,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub kind: ElementKind,
    pub scores: Vec<InfluenceScore>,
    /// Sorted by group name.
    pub group_means: Vec<GroupMean>,
}

impl InfluenceReport {
    fn new(kind: ElementKind, scores: Vec<InfluenceScore>) -> Self {
        let mut groups: std::collections::BTreeMap<&str, (usize, f64)> = Default::default();
        for s in &scores {
            let e = groups.entry(&s.group).or_default();
            e.0 += 1;
            e.1 += s.score;
        }
        let group_means = groups
            .into_iter()
            .map(|(g, (c, sum))| GroupMean { group: g.into(), count: c, mean: sum / c as f64 })
            .collect();
        InfluenceReport { kind, scores, group_means }
    }

    pub fn mean_of(&self, group: &str) -> Option<f64> {
        self.group_means.iter().find(|m| m.group == group).map(|m| m.mean)
    }

    /// `kind,u,v,group,score`, one row per element.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            kind: ElementKind,
            u: usize,
            v: Option<usize>,
            group: &'a str,
            score: f64,
        }
        let mut w = csv::Writer::from_path(path)?;
        for s in &self.scores {
            w.serialize(Row { kind: self.kind, u: s.u, v: s.v, group: &s.group, score: s.score })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: String,
    pub count: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    pub lhs: GroupStats,
    pub rhs: GroupStats,
    /// `lhs.loss - rhs.loss`.
    pub loss_gap: f64,
}

impl DisparityReport {
    /// `group,count,loss,accuracy` for both groups.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(&self.lhs)?;
        w.serialize(&self.rhs)?;
        w.flush()?;
        Ok(())
    }
}

/// Per-node cross-entropy and correctness under `m`.
fn node_losses(m: &GnnModel, g: &Graph) -> Result<Vec<(f64, bool)>> {
    let o = forward(m, g, None)?.o;
    Ok(g.labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let row = o.row(i);
            (-row[y].max(f64::MIN_POSITIVE).ln(), crate::gnn::argmax(row.iter().copied()) == y)
        })
        .collect())
}

/// Mean loss and accuracy of `m` on the lhs and rhs nodes of `mask`.
pub fn group_metrics(m: &GnnModel, g: &Graph, p: &PropertySpec, mask: &[usize]) -> Result<DisparityReport> {
    let (Level::Node, Group::Value(lhs), Group::Value(rhs)) = (p.level, p.lhs, p.rhs) else {
        return Err(Error::Usage("group metrics need a node-level property over two values".into()));
    };
    if let Some(&bad) = mask.iter().find(|&&i| i >= g.n()) {
        return Err(Error::NodeRange { id: bad, n: g.n() });
    }
    let per_node = node_losses(m, g)?;
    let stats = |value: i64| -> Result<GroupStats> {
        let members: Vec<&(f64, bool)> =
            mask.iter().filter(|&&i| g.property_value(i) == value).map(|&i| &per_node[i]).collect();
        if members.is_empty() {
            return Err(Error::GroupEmpty(value.to_string()));
        }
        let c = members.len() as f64;
        Ok(GroupStats {
            group: value.to_string(),
            count: members.len(),
            loss: members.iter().map(|r| r.0).sum::<f64>() / c,
            accuracy: members.iter().filter(|r| r.1).count() as f64 / c,
        })
    };
    let (l, r) = (stats(lhs)?, stats(rhs)?);
    Ok(DisparityReport { loss_gap: l.loss - r.loss, lhs: l, rhs: r })
}

/// Trains one model per graph on a seeded 70/30 node split and returns
/// the mean training loss at the returned epoch.
fn mean_train_loss(graphs: &[Graph], cfg: &GnnConfig, seed: u64, tag: &str) -> Result<f64> {
    let losses = graphs
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            precondition(g.n() >= 2, || "each graph needs at least two nodes".into())?;
            let mut ids: Vec<usize> = (0..g.n()).collect();
            rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut sub_rng(seed, tag, k as u64));
            let cut = ((g.n() as f64 * 0.7).round() as usize).clamp(1, g.n() - 1);
            let (mut tr, mut te) = (ids[..cut].to_vec(), ids[cut..].to_vec());
            tr.sort_unstable();
            te.sort_unstable();
            let (_, report) = train(g, cfg, &tr, &te)?;
            Ok(report.train_loss[report.best_epoch - 1])
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// `|mean loss of models trained on positives - mean loss on negatives|`.
pub fn loss_gap_pos_neg(pos: &[Graph], neg: &[Graph], cfg: &GnnConfig, seed: u64) -> Result<f64> {
    precondition(!pos.is_empty() && !neg.is_empty(), || "both graph sets must be nonempty".into())?;
    Ok((mean_train_loss(pos, cfg, seed, "loss-gap")? - mean_train_loss(neg, cfg, seed, "loss-gap")?).abs())
}

/// The same gap from already trained attack outputs.
pub fn loss_gap_from_outputs(outputs: &[ModelOutput]) -> Result<f64> {
    let mean = |flag: usize| -> Option<f64> {
        let v: Vec<f64> = outputs.iter().filter(|o| o.label() == flag).map(|o| o.train_loss).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    match (mean(1), mean(0)) {
        (Some(p), Some(n)) => Ok((p - n).abs()),
        _ => Err(Error::Precondition("loss gap needs positive and negative outputs".into())),
    }
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    precondition(x.len() == y.len() && x.len() >= 2, || {
        format!("pearson needs two equal-length sequences of at least 2, got {} and {}", x.len(), y.len())
    })?;
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("an input is constant".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between a graph's property column and its labels.
pub fn property_label_correlation(g: &Graph) -> Result<f64> {
    let x: Vec<f64> = g.property_column().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = g.labels().iter().map(|&v| v as f64).collect();
    pearson(&x, &y)
}

pub const BUCKET_LABELS: [&str; 4] = ["Top-25%", "25%-50%", "50%-75%", "Last-25%"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapBucket {
    pub bucket: String,
    pub count: usize,
    pub mean_gap: f64,
    pub accuracy: f64,
}

/// Sorts `(loss gap, attack correct)` pairs by gap and splits them into
/// four quartiles whose sizes differ by at most one.
pub fn gap_buckets(samples: &[(f64, bool)]) -> Result<Vec<GapBucket>> {
    precondition(samples.len() >= 4, || format!("gap buckets need at least 4 samples, got {}", samples.len()))?;
    precondition(samples.iter().all(|s| s.0.is_finite()), || "loss gaps must be finite".into())?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (q, extra) = (sorted.len() / 4, sorted.len() % 4);
    let mut start = 0;
    Ok(BUCKET_LABELS
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let len = q + usize::from(i < extra);
            let part = &sorted[start..start + len];
            start += len;
            GapBucket {
                bucket: (*label).into(),
                count: len,
                mean_gap: part.iter().map(|s| s.0).sum::<f64>() / len as f64,
                accuracy: part.iter().filter(|s| s.1).count() as f64 / len as f64,
            }
        })
        .collect())
}

/// `bucket,count,mean_gap,accuracy`.
pub fn write_gap_buckets_csv(path: impl AsRef<Path>, buckets: &[GapBucket]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for b in buckets {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionPoint {
    pub x: f64,
    pub y: f64,
    pub flag: usize,
}

/// Two-dimensional t-SNE of attack feature vectors, with their flags.
pub fn export_distribution(features: &[FeatureVector], flags: &[usize], seed: u64) -> Result<Vec<DistributionPoint>> {
    precondition(features.len() == flags.len(), || {
        format!("{} feature vectors but {} flags", features.len(), flags.len())
    })?;
    precondition(features.len() >= 4, || "distribution export needs at least 4 vectors".into())?;
    let y = tsne(&to_matrix(features)?, &TsneParams::default(), seed)?;
    Ok(y.rows().into_iter().zip(flags).map(|(r, &flag)| DistributionPoint { x: r[0], y: r[1], flag }).collect())
}

/// `x,y,flag`.
pub fn write_distribution_csv(path: impl AsRef<Path>, points: &[DistributionPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Distance between the two flags' centroids, and the mean distance of a
/// point to its own centroid.
pub fn centroid_separation(points: &[DistributionPoint]) -> Result<(f64, f64)> {
    let centroid = |flag: usize| -> Result<(f64, f64, Vec<&DistributionPoint>)> {
        let ps: Vec<&DistributionPoint> = points.iter().filter(|p| p.flag == flag).collect();
        if ps.is_empty() {
            return Err(Error::GroupEmpty(flag.to_string()));
        }
        let c = ps.len() as f64;
        Ok((ps.iter().map(|p| p.x).sum::<f64>() / c, ps.iter().map(|p| p.y).sum::<f64>() / c, ps))
    };
    let (a, b) = (centroid(0)?, centroid(1)?);
    let spread: f64 = [&a, &b]
        .iter()
        .flat_map(|(cx, cy, ps)| ps.iter().map(move |p| (p.x - cx).hypot(p.y - cy)))
        .sum::<f64>()
        / points.len() as f64;
    Ok(((a.0 - b.0).hypot(a.1 - b.1), spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn cosine_distance_kernel() {
        assert_eq!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((cosine_distance(&[1.0, 2.0], &[-1.0, -2.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(cosine_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_hand_cases() {
        let x = [1.0, 2.0, 4.0, 7.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&x, &[3.0; 4]), Err(Error::UndefinedCorrelation(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        // Hand value: x = [1, 2, 3], y = [1, 3, 2] gives r = 0.5.
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gap_bucket_examples() {
        let s: Vec<(f64, bool)> = (1..=8).map(|g| (g as f64, true)).collect();
        let b = gap_buckets(&s).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.iter().all(|q| q.count == 2 && q.accuracy == 1.0));
        assert_eq!(b[0].mean_gap, 1.5);
        assert_eq!(b[3].mean_gap, 7.5);
        assert!(gap_buckets(&s[..3]).is_err());
    }

    #[test]
    fn distribution_points_and_separation() {
        let p = |x, y, flag| DistributionPoint { x, y, flag };
        let pts = [p(0.0, 0.0, 0), p(0.0, 2.0, 0), p(10.0, 0.0, 1), p(10.0, 2.0, 1)];
        let (sep, spread) = centroid_separation(&pts).unwrap();
        assert_eq!((sep, spread), (10.0, 1.0));
        let dir = tempfile::tempdir().unwrap();
        write_distribution_csv(dir.path().join("d.csv"), &pts[..1]).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("d.csv")).unwrap(), "x,y,flag\n0.0,0.0,0\n");
    }

    fn small_graph() -> Graph {
        // Node 5 is isolated with all-zero features.
        Graph::new(
            array![
                [1.0, 1.0, 0.3],
                [1.0, 1.0, -0.2],
                [0.0, 0.0, 0.5],
                [0.0, 0.0, -0.4],
                [1.0, 0.0, 0.1],
                [0.0, 0.0, 0.0]
            ],
            vec![1, 1, 0, 0, 1, 0],
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
            0,
        )
        .unwrap()
    }

    fn quick_cfg() -> GnnConfig {
        GnnConfig { hidden_dim: 8, max_epochs: 60, patience: 60, ..Default::default() }
    }

    #[test]
    fn isolated_zero_node_has_no_influence() {
        let g = small_graph();
        let inf = Influence::new(&g, &quick_cfg(), &[0, 1, 2, 3], &[4]).unwrap();
        assert!(inf.node(5).unwrap().abs() < 1e-9);
        let r = inf.nodes(&[0, 1, 2, 3, 4, 5]).unwrap();
        assert!(r.scores.iter().all(|s| (0.0..=2.0).contains(&s.score)));
        assert_eq!(r.group_means.len(), 2);
        let e = inf.edges(&[(0, 1), (1, 2)]).unwrap();
        assert_eq!(e.scores[0].group, "1");
        assert_eq!(e.scores[1].group, "mixed");
        assert_eq!(inf.edge(0, 1).unwrap(), inf.edge(1, 0).unwrap());
        assert!(inf.edge(0, 2).is_err());
        assert!(Influence::new(&g, &quick_cfg(), &[0], &[1]).unwrap().node(0).is_err());
    }

    #[test]
    fn group_metrics_weighting_and_errors() {
        let g = small_graph();
        let cfg = quick_cfg();
        let (m, _) = train(&g, &cfg, &[0, 1, 2, 3], &[4]).unwrap();
        let p = PropertySpec::node_majority(0, 1, 0);
        let mask: Vec<usize> = (0..6).collect();
        let r = group_metrics(&m, &g, &p, &mask).unwrap();
        assert_eq!((r.lhs.count, r.rhs.count), (3, 3));
        assert_eq!(r.loss_gap, r.lhs.loss - r.rhs.loss);
        let all = node_losses(&m, &g).unwrap();
        let overall = all.iter().map(|x| x.0).sum::<f64>() / 6.0;
        let weighted = (r.lhs.loss * 3.0 + r.rhs.loss * 3.0) / 6.0;
        assert!((overall - weighted).abs() < 1e-12);
        assert!(matches!(group_metrics(&m, &g, &p, &[0, 1]), Err(Error::GroupEmpty(_))));
    }

    #[test]
    fn identical_graph_sets_have_no_loss_gap() {
        let g = small_graph();
        let gs = vec![g.clone(), g];
        assert_eq!(loss_gap_pos_neg(&gs, &gs, &quick_cfg(), 3).unwrap(), 0.0);
        assert!(loss_gap_pos_neg(&gs, &[], &quick_cfg(), 3).is_err());
    }

    proptest! {
        #[test]
        fn gap_buckets_partition(gaps in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 4..60)) {
            let b = gap_buckets(&gaps).unwrap();
            let sizes: Vec<usize> = b.iter().map(|q| q.count).collect();
            prop_assert_eq!(sizes.iter().sum::<usize>(), gaps.len());
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert!(b.windows(2).all(|w| w[0].mean_gap <= w[1].mean_gap + 1e-12));
            let correct = gaps.iter().filter(|g| g.1).count() as f64;
            let weighted: f64 = b.iter().map(|q| q.accuracy * q.count as f64).sum();
            prop_assert!((weighted - correct).abs() < 1e-9);
        }

        #[test]
        fn pearson_symmetric_and_affine_invariant(
            xs in prop::collection::vec(-10.0f64..10.0, 3..30),
            a in 0.1f64..5.0,
            c in -5.0f64..5.0,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x - i as f64).collect();
            if let (Ok(r), Ok(s)) = (pearson(&xs, &ys), pearson(&ys, &xs)) {
                prop_assert!((r - s).abs() < 1e-9);
                let t: Vec<f64> = xs.iter().map(|x| a * x + c).collect();
                prop_assert!((pearson(&t, &ys).unwrap() - r).abs() < 1e-7);
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn cosine_distance_scale_invariant(
            v in prop::collection::vec(-3.0f64..3.0, 2..10),
            w in prop::collection::vec(-3.0f64..3.0, 2..10),
            s in 0.1f64..10.0,
            t in 0.1f64..10.0,
        ) {
            let n = v.len().min(w.len());
            let (v, w) = (&v[..n], &w[..n]);
            let d = cosine_distance(v, w).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            let vs: Vec<f64> = v.iter().map(|x| x * s).collect();
            let ws: Vec<f64> = w.iter().map(|x| x * t).collect();
            if v.iter().any(|x| *x != 0.0) && w.iter().any(|x| *x != 0.0) && v != w {
                prop_assert!((cosine_distance(&vs, &ws).unwrap() - d).abs() < 1e-9);
            }
        }
    }
}
