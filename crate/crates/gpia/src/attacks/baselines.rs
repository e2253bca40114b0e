//! Comparison methods: attribute inference, k-means, stacked classifiers,
//! direct summaries of auxiliary data and loss-gap thresholds.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng as _;

use super::result::{AttackResult, Prediction};
use super::shadow::ModelOutput;
use crate::classifiers::{fit, predict, ClassifierKind};
use crate::error::{precondition, Error, Result};
use crate::graph::{count_groups_from_values, evaluate_from_values, PropertySpec};
use crate::rng::sub_rng;

fn predictions(predicted: &[usize], scores: &[f64], truth: &[usize]) -> Vec<Prediction> {
    predicted
        .iter()
        .zip(scores)
        .zip(truth)
        .enumerate()
        .map(|(sample, ((&predicted, &score), &truth))| Prediction { sample, truth, predicted, score })
        .collect()
}

fn check_truth(n: usize, truth: &[usize]) -> Result<()> {
    if n != truth.len() {
        return Err(Error::Shape(format!("{n} test inputs but {} labels", truth.len())));
    }
    Ok(())
}

/// A one-feature decision rule: positive when the value lies above (or,
/// with `positive_above == false`, below) `value`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub positive_above: bool,
}

impl Threshold {
    pub fn classify(&self, v: f64) -> usize {
        usize::from(if self.positive_above { v > self.value } else { v < self.value })
    }
}

/// The threshold with the best accuracy on `(values, flags)`. Candidates
/// are the midpoints between consecutive distinct values plus the two
/// infinities. Ties go to the "positive above" rule, then to the smaller
/// threshold.
pub fn fit_threshold(values: &[f64], flags: &[usize]) -> Result<Threshold> {
    precondition(!values.is_empty(), || "threshold needs at least one value".into())?;
    check_truth(values.len(), flags)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("threshold values must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut candidates = vec![f64::NEG_INFINITY];
    candidates.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    candidates.push(f64::INFINITY);
    let mut best: Option<(usize, Threshold)> = None;
    for positive_above in [true, false] {
        for &value in &candidates {
            let t = Threshold { value, positive_above };
            let correct = values.iter().zip(flags).filter(|&(&v, &f)| t.classify(v) == f).count();
            if best.is_none_or(|(c, _)| correct > c) {
                best = Some((correct, t));
            }
        }
    }
    Ok(best.expect("candidates are non-empty").1)
}

fn threshold_attack(name: &str, known: &[f64], flags: &[usize], targets: &[f64], truth: &[usize], seed: u64) -> Result<AttackResult> {
    check_truth(targets.len(), truth)?;
    let t = fit_threshold(known, flags)?;
    let predicted: Vec<usize> = targets.iter().map(|&v| t.classify(v)).collect();
    let scores: Vec<f64> = predicted.iter().map(|&p| p as f64).collect();
    AttackResult::baseline(name, predictions(&predicted, &scores, truth), seed)
}

/// `COUNT(lhs) / COUNT(rhs)` of each output's subgraph.
pub fn sample_group_ratios(outputs: &[ModelOutput], p: &PropertySpec) -> Result<Vec<f64>> {
    outputs
        .iter()
        .map(|o| {
            let (lhs, rhs) = count_groups_from_values(&o.property_values, &o.sample.edges, p);
            if rhs == 0 {
                return Err(Error::DivisionByZero(format!("sample {} has no '{}' members", o.index, p.rhs)));
            }
            Ok(lhs as f64 / rhs as f64)
        })
        .collect()
}

/// Thresholds the group size ratio fitted on the adversary's flagged
/// graphs, applied to the ratio the adversary can compute for each target.
pub fn baseline_dsad(
    known_ratios: &[f64],
    flags: &[usize],
    target_ratios: &[f64],
    truth: &[usize],
    seed: u64,
) -> Result<AttackResult> {
    threshold_attack("baseline-dsad", known_ratios, flags, target_ratios, truth, seed)
}

/// Thresholds the train-minus-held-out loss gap of each model.
pub fn baseline_lossgap(known: &[ModelOutput], targets: &[ModelOutput], seed: u64) -> Result<AttackResult> {
    let gaps: Vec<f64> = known.iter().map(ModelOutput::loss_gap).collect();
    let flags: Vec<usize> = known.iter().map(ModelOutput::label).collect();
    let tg: Vec<f64> = targets.iter().map(ModelOutput::loss_gap).collect();
    let truth: Vec<usize> = targets.iter().map(ModelOutput::label).collect();
    threshold_attack("baseline-lossgap", &gaps, &flags, &tg, &truth, seed)
}

/// Per-node features: the observed embeddings side by side, or the
/// posteriors when no embeddings were recorded.
fn node_features(o: &ModelOutput) -> Array2<f64> {
    if o.embeddings.is_empty() {
        return o.posteriors.clone();
    }
    let views: Vec<_> = o.embeddings.iter().map(|z| z.view()).collect();
    ndarray::concatenate(Axis(1), &views).expect("embeddings share a row count")
}

/// Evaluates the property on predicted node values.
pub fn aia_from_node_predictions(targets: &[ModelOutput], values: &[Vec<i64>], p: &PropertySpec, seed: u64) -> Result<AttackResult> {
    check_truth(values.len(), &targets.iter().map(ModelOutput::label).collect::<Vec<_>>())?;
    let truth: Vec<usize> = targets.iter().map(ModelOutput::label).collect();
    let mut predicted = Vec::with_capacity(targets.len());
    for (o, v) in targets.iter().zip(values) {
        if v.len() != o.sample.n() {
            return Err(Error::Shape(format!("{} predicted values for {} nodes", v.len(), o.sample.n())));
        }
        predicted.push(usize::from(evaluate_from_values(v, &o.sample.edges, p)));
    }
    let scores: Vec<f64> = predicted.iter().map(|&p| p as f64).collect();
    AttackResult::baseline("baseline-aia", predictions(&predicted, &scores, &truth), seed)
}

/// Attribute inference: a node classifier maps each node's observed output
/// to its property value; the property is then evaluated on the predicted
/// values. Trains on at most `max_nodes` nodes of the known outputs.
pub fn baseline_aia(
    known: &[ModelOutput],
    targets: &[ModelOutput],
    p: &PropertySpec,
    kind: &ClassifierKind,
    max_nodes: usize,
    seed: u64,
) -> Result<AttackResult> {
    precondition(!known.is_empty() && !targets.is_empty(), || "AIA needs known and target outputs".into())?;
    let values: BTreeSet<i64> = known.iter().flat_map(|o| o.property_values.iter().copied()).collect();
    let values: Vec<i64> = values.into_iter().collect();
    if values.len() != 2 {
        return Err(Error::DegenerateLabels(format!(
            "attribute inference needs exactly two property values among known nodes, found {}",
            values.len()
        )));
    }
    let all: Vec<(usize, usize)> =
        known.iter().enumerate().flat_map(|(k, o)| (0..o.sample.n()).map(move |i| (k, i))).collect();
    let mut picked: Vec<usize> = if all.len() > max_nodes {
        index::sample(&mut sub_rng(seed, "aia-nodes", 0), all.len(), max_nodes).into_vec()
    } else {
        (0..all.len()).collect()
    };
    picked.sort_unstable();
    let feats: Vec<Array2<f64>> = known.iter().map(node_features).collect();
    let d = feats[0].ncols();
    let mut x = Array2::zeros((picked.len(), d));
    let mut y = Vec::with_capacity(picked.len());
    for (r, &j) in picked.iter().enumerate() {
        let (k, i) = all[j];
        x.row_mut(r).assign(&feats[k].row(i));
        y.push(usize::from(known[k].property_values[i] == values[1]));
    }
    let model = fit(&x, &y, kind, seed)?;
    let predicted: Vec<Vec<i64>> = targets
        .iter()
        .map(|o| Ok(predict(&model, &node_features(o))?.0.iter().map(|&c| values[c]).collect()))
        .collect::<Result<_>>()?;
    aia_from_node_predictions(targets, &predicted, p, seed)
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const KMEANS_RESTARTS: u64 = 10;
const KMEANS_ITERS: usize = 300;

/// Two-means clustering with k-means++ seeding and several restarts;
/// returns the centroids and assignments of the lowest-inertia restart.
pub fn kmeans2(x: &Array2<f64>, seed: u64) -> Result<(Array2<f64>, Vec<usize>)> {
    let m = x.nrows();
    precondition(m >= 2 && x.ncols() >= 1, || "k-means needs at least 2 rows".into())?;
    if x.rows().into_iter().all(|r| r == x.row(0)) {
        return Err(Error::DegenerateCluster("all rows are identical".into()));
    }
    let mut best: Option<(f64, Array2<f64>, Vec<usize>)> = None;
    for r in 0..KMEANS_RESTARTS {
        let mut rng = sub_rng(seed, "kmeans", r);
        let first = rng.random_range(0..m);
        let d: Vec<f64> = (0..m).map(|i| sq_dist(x.row(i), x.row(first))).collect();
        let total: f64 = d.iter().sum();
        let mut u = rng.random_range(0.0..total);
        let mut second = m - 1;
        for (i, &di) in d.iter().enumerate() {
            if u < di {
                second = i;
                break;
            }
            u -= di;
        }
        let mut c = ndarray::stack(Axis(0), &[x.row(first), x.row(second)]).expect("same width");
        let mut assign = vec![usize::MAX; m];
        for _ in 0..KMEANS_ITERS {
            let next: Vec<usize> = (0..m)
                .map(|i| usize::from(sq_dist(x.row(i), c.row(1)) < sq_dist(x.row(i), c.row(0))))
                .collect();
            if next == assign {
                break;
            }
            assign = next;
            for k in 0..2 {
                let rows: Vec<usize> = (0..m).filter(|&i| assign[i] == k).collect();
                if !rows.is_empty() {
                    c.row_mut(k).assign(&x.select(Axis(0), &rows).mean_axis(Axis(0)).expect("non-empty"));
                }
            }
        }
        let inertia: f64 = (0..m).map(|i| sq_dist(x.row(i), c.row(assign[i]))).sum();
        if best.as_ref().is_none_or(|b| inertia < b.0) {
            best = Some((inertia, c, assign));
        }
    }
    let (_, c, a) = best.expect("at least one restart");
    Ok((c, a))
}

/// Clusters the training vectors into two groups, labels each cluster by
/// its majority training label and gives each test vector the label of
/// the nearer centroid.
pub fn baseline_kmeans(
    x_train: &Array2<f64>,
    y_train: &[usize],
    x_test: &Array2<f64>,
    truth: &[usize],
    seed: u64,
) -> Result<AttackResult> {
    check_truth(x_train.nrows(), y_train)?;
    check_truth(x_test.nrows(), truth)?;
    let (c, assign) = kmeans2(x_train, seed)?;
    let overall = usize::from(2 * y_train.iter().sum::<usize>() >= y_train.len());
    let cluster_label: Vec<usize> = (0..2)
        .map(|k| {
            let members: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] == k).map(|i| y_train[i]).collect();
            let pos = members.iter().sum::<usize>();
            match (2 * pos).cmp(&members.len()) {
                std::cmp::Ordering::Greater => 1,
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => overall,
            }
        })
        .collect();
    let predicted: Vec<usize> = x_test
        .rows()
        .into_iter()
        .map(|r| cluster_label[usize::from(sq_dist(r, c.row(1)) < sq_dist(r, c.row(0)))])
        .collect();
    let scores: Vec<f64> = predicted.iter().map(|&p| p as f64).collect();
    AttackResult::baseline("baseline-kmeans", predictions(&predicted, &scores, truth), seed)
}

/// Stacking: each base classifier is fitted on one half of the training
/// set (split per class); their scores on the other half train a
/// logistic-regression meta-model.
pub fn baseline_meta(
    x_train: &Array2<f64>,
    y_train: &[usize],
    x_test: &Array2<f64>,
    truth: &[usize],
    bases: &[ClassifierKind],
    seed: u64,
) -> Result<AttackResult> {
    check_truth(x_train.nrows(), y_train)?;
    check_truth(x_test.nrows(), truth)?;
    precondition(!bases.is_empty(), || "meta-classifier needs base classifiers".into())?;
    let mut rng = sub_rng(seed, "meta-split", 0);
    let (mut half_a, mut half_b) = (Vec::new(), Vec::new());
    for class in 0..2 {
        let mut rows: Vec<usize> = (0..y_train.len()).filter(|&i| y_train[i] == class).collect();
        rows.shuffle(&mut rng);
        let cut = rows.len() / 2;
        half_a.extend_from_slice(&rows[..cut]);
        half_b.extend_from_slice(&rows[cut..]);
    }
    half_a.sort_unstable();
    half_b.sort_unstable();
    let pick = |rows: &[usize]| -> (Array2<f64>, Vec<usize>) {
        (x_train.select(Axis(0), rows), rows.iter().map(|&i| y_train[i]).collect())
    };
    let (xa, ya) = pick(&half_a);
    let (xb, yb) = pick(&half_b);
    let mut meta_train = Array2::zeros((xb.nrows(), bases.len()));
    let mut meta_test = Array2::zeros((x_test.nrows(), bases.len()));
    for (j, kind) in bases.iter().enumerate() {
        let m = fit(&xa, &ya, kind, crate::rng::sub_seed(seed, "meta-base", j as u64))?;
        meta_train.column_mut(j).assign(&Array1::from(predict(&m, &xb)?.1));
        meta_test.column_mut(j).assign(&Array1::from(predict(&m, x_test)?.1));
    }
    let meta = fit(&meta_train, &yb, &ClassifierKind::lr(), seed)?;
    let (predicted, scores) = predict(&meta, &meta_test)?;
    AttackResult::baseline("baseline-meta", predictions(&predicted, &scores, truth), seed)
}
