//! Binary attack classifiers and the attack-accuracy metric.
//!
//! MLP and logistic-regression models standardize their inputs with
//! per-column statistics of the training matrix; the forest works on raw
//! values.

mod forest;

use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::nn::{sigmoid, Act, Loss, Mlp};
use crate::rng::sub_rng;
use forest::{fit_forest, Tree, TreeParams};

fn default_hidden() -> Vec<usize> {
    vec![64, 32, 16]
}
fn default_mlp_epochs() -> usize {
    1000
}
fn default_mlp_lr() -> f64 {
    0.001
}
fn default_trees() -> usize {
    100
}
fn default_depth() -> usize {
    150
}
fn default_min_leaf() -> usize {
    1
}
fn default_c() -> f64 {
    1.0
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ClassifierKind {
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default = "default_mlp_epochs")]
        epochs: usize,
        #[serde(default = "default_mlp_lr")]
        lr: f64,
    },
    Rf {
        #[serde(default = "default_trees")]
        n_trees: usize,
        #[serde(default = "default_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
    Lr {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default = "default_tol")]
        tol: f64,
    },
}

impl ClassifierKind {
    pub fn mlp() -> Self {
        ClassifierKind::Mlp { hidden: default_hidden(), epochs: default_mlp_epochs(), lr: default_mlp_lr() }
    }

    pub fn rf() -> Self {
        ClassifierKind::Rf { n_trees: default_trees(), max_depth: default_depth(), min_leaf: default_min_leaf() }
    }

    pub fn lr() -> Self {
        ClassifierKind::Lr { c: default_c(), max_iter: default_max_iter(), tol: default_tol() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Mlp { .. } => "mlp",
            ClassifierKind::Rf { .. } => "rf",
            ClassifierKind::Lr { .. } => "lr",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ClassifierKind::Mlp { hidden, epochs, lr } => {
                !hidden.is_empty() && hidden.iter().all(|&h| h > 0) && *epochs > 0 && *lr > 0.0
            }
            ClassifierKind::Rf { n_trees, max_depth, min_leaf } => *n_trees > 0 && *max_depth > 0 && *min_leaf > 0,
            ClassifierKind::Lr { c, max_iter, tol } => *c > 0.0 && *max_iter > 0 && *tol > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{} classifier parameters must be positive", self.name())))
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Self::mlp()),
            "rf" => Ok(Self::rf()),
            "lr" => Ok(Self::lr()),
            _ => Err(Error::Config(format!("unknown classifier '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Standardizer {
    #[serde(with = "crate::serial::vector")]
    mean: Array1<f64>,
    #[serde(with = "crate::serial::vector")]
    scale: Array1<f64>,
}

impl Standardizer {
    fn fit(x: &Array2<f64>) -> Self {
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
        Standardizer { mean, scale }
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        (x - &self.mean) / &self.scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Fitted {
    Mlp { scaler: Standardizer, net: Mlp },
    Rf { trees: Vec<Tree> },
    Lr {
        scaler: Standardizer,
        #[serde(with = "crate::serial::vector")]
        w: Array1<f64>,
        b: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackModel {
    kind: ClassifierKind,
    input_dim: usize,
    fitted: Fitted,
}

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: AttackModel,
}

fn check_labels(y: &[usize]) -> Result<()> {
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Precondition(format!("label {bad} is not binary")));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::DegenerateLabels(format!(
            "all {} training labels are {}",
            y.len(),
            y.first().copied().unwrap_or(0)
        )));
    }
    Ok(())
}

/// L2-regularized logistic regression, `C * sum(logloss) + |w|^2 / 2`
/// with an unpenalized intercept, by gradient descent with backtracking.
fn fit_logistic(x: &Array2<f64>, y: &[usize], c: f64, max_iter: usize, tol: f64) -> (Array1<f64>, f64) {
    let d = x.ncols();
    let yv = Array1::from_iter(y.iter().map(|&v| v as f64));
    let objective = |w: &Array1<f64>, b: f64| -> f64 {
        let z = x.dot(w) + b;
        let ll: f64 = z
            .iter()
            .zip(&yv)
            .map(|(&z, &t)| {
                // log(1 + exp(z)) - t z, computed stably.
                let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                softplus - t * z
            })
            .sum();
        c * ll + 0.5 * w.dot(w)
    };
    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut f = objective(&w, b);
    let mut step = 1.0;
    for _ in 0..max_iter {
        let p = (x.dot(&w) + b).mapv(sigmoid);
        let r = &p - &yv;
        let gw = x.t().dot(&r) * c + &w;
        let gb = c * r.sum();
        let gmax = gw.iter().fold(gb.abs(), |m, v| m.max(v.abs()));
        if gmax <= tol {
            break;
        }
        let gnorm2 = gw.dot(&gw) + gb * gb;
        step *= 2.0;
        loop {
            let w2 = &w - &(&gw * step);
            let b2 = b - step * gb;
            let f2 = objective(&w2, b2);
            if f2 <= f - 0.5 * step * gnorm2 || step < 1e-14 {
                w = w2;
                b = b2;
                f = f2;
                break;
            }
            step *= 0.5;
        }
    }
    (w, b)
}

/// Fits a classifier on rows of `x` with binary labels `y`.
pub fn fit(x: &Array2<f64>, y: &[usize], kind: &ClassifierKind, seed: u64) -> Result<AttackModel> {
    kind.validate()?;
    let (m, d) = x.dim();
    precondition(m >= 2, || format!("need at least 2 training rows, got {m}"))?;
    precondition(d >= 1, || "training matrix has no columns".into())?;
    if y.len() != m {
        return Err(Error::Shape(format!("{m} rows but {} labels", y.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("training matrix has non-finite entries".into()));
    }
    check_labels(y)?;
    let fitted = match kind {
        ClassifierKind::Mlp { hidden, epochs, lr } => {
            let scaler = Standardizer::fit(x);
            let xs = scaler.apply(x);
            let mut sizes = vec![d];
            sizes.extend(hidden);
            sizes.push(1);
            let mut acts = vec![Act::Relu; hidden.len()];
            acts.push(Act::Sigmoid);
            let mut net = Mlp::new(&sizes, &acts, &mut sub_rng(seed, "mlp-init", 0));
            let yt = Array2::from_shape_fn((m, 1), |(i, _)| y[i] as f64);
            net.fit(&xs, &yt, Loss::Bce, *epochs, *lr);
            Fitted::Mlp { scaler, net }
        }
        ClassifierKind::Rf { n_trees, max_depth, min_leaf } => {
            let params = TreeParams {
                max_depth: *max_depth,
                min_leaf: *min_leaf,
                max_features: ((d as f64).sqrt().floor() as usize).max(1),
            };
            Fitted::Rf { trees: fit_forest(x, y, *n_trees, &params, seed) }
        }
        ClassifierKind::Lr { c, max_iter, tol } => {
            let scaler = Standardizer::fit(x);
            let (w, b) = fit_logistic(&scaler.apply(x), y, *c, *max_iter, *tol);
            Fitted::Lr { scaler, w, b }
        }
    };
    Ok(AttackModel { kind: kind.clone(), input_dim: d, fitted })
}

/// Labels (`score >= 0.5`) and positive-class scores in `[0, 1]`.
pub fn predict(model: &AttackModel, x: &Array2<f64>) -> Result<(Vec<usize>, Vec<f64>)> {
    if x.nrows() == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if x.ncols() != model.input_dim {
        return Err(Error::Shape(format!(
            "model expects {} features, got {}",
            model.input_dim,
            x.ncols()
        )));
    }
    let scores: Vec<f64> = match &model.fitted {
        Fitted::Mlp { scaler, net } => net.predict(&scaler.apply(x)).column(0).to_vec(),
        Fitted::Rf { trees } => x
            .rows()
            .into_iter()
            .map(|r| trees.iter().map(|t| t.score(r)).sum::<f64>() / trees.len() as f64)
            .collect(),
        Fitted::Lr { scaler, w, b } => (scaler.apply(x).dot(w) + *b).mapv(sigmoid).to_vec(),
    };
    let labels = scores.iter().map(|&s| usize::from(s >= 0.5)).collect();
    Ok((labels, scores))
}

/// Fraction of positions where `pred` agrees with `truth`.
pub fn attack_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    precondition(!pred.is_empty(), || "no predictions to score".into())?;
    let correct = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / pred.len() as f64)
}

impl AttackModel {
    pub fn kind(&self) -> &ClassifierKind {
        &self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile { format_version: FORMAT_VERSION, model: self.clone() })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported classifier format version {}", f.format_version)));
        }
        Ok(f.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn separable() -> (Array2<f64>, Vec<usize>) {
        // Points above the line x0 + x1 = 1 (by at least 0.5) are positive.
        let x = array![
            [0.0, 0.0], [0.2, -0.5], [-1.0, 0.3], [0.1, 0.2], [-0.5, -0.5],
            [1.5, 0.5], [1.0, 1.2], [2.0, 0.0], [0.4, 1.8], [1.2, 1.1]
        ];
        let y = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        (x, y)
    }

    #[test]
    fn logistic_regression_separates_margin_fixture() {
        let (x, y) = separable();
        let m = fit(&x, &y, &ClassifierKind::lr(), 0).unwrap();
        let (labels, scores) = predict(&m, &x).unwrap();
        assert_eq!(labels, y);
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn every_kind_fits_and_is_deterministic() {
        let (x, y) = separable();
        for kind in [ClassifierKind::mlp(), ClassifierKind::rf(), ClassifierKind::lr()] {
            let a = fit(&x, &y, &kind, 3).unwrap();
            let b = fit(&x, &y, &kind, 3).unwrap();
            assert_eq!(a, b);
            assert_eq!(predict(&a, &x).unwrap().0, y, "{}", kind.name());
        }
    }

    #[test]
    fn degenerate_and_shape_errors() {
        let (x, _) = separable();
        assert!(matches!(fit(&x, &[0; 10], &ClassifierKind::lr(), 0), Err(Error::DegenerateLabels(_))));
        let (x, y) = separable();
        let m = fit(&x, &y, &ClassifierKind::rf(), 0).unwrap();
        assert!(matches!(predict(&m, &array![[1.0, 2.0, 3.0]]), Err(Error::Shape(_))));
        let (l, s) = predict(&m, &Array2::zeros((0, 2))).unwrap();
        assert!(l.is_empty() && s.is_empty());
    }

    #[test]
    fn zero_weight_mlp_scores_one_half() {
        let (x, y) = separable();
        let mut m = fit(&x, &y, &ClassifierKind::Mlp { hidden: vec![4], epochs: 1, lr: 0.001 }, 0).unwrap();
        if let Fitted::Mlp { net, .. } = &mut m.fitted {
            for l in &mut net.layers {
                l.w.fill(0.0);
                l.b.fill(0.0);
            }
        }
        let (labels, scores) = predict(&m, &x).unwrap();
        assert!(scores.iter().all(|&s| s == 0.5));
        assert!(labels.iter().all(|&l| l == 1));
    }

    #[test]
    fn constant_column_is_never_split_on() {
        let x = array![[0.0, 7.0], [1.0, 7.0], [2.0, 7.0], [3.0, 7.0], [4.0, 7.0], [5.0, 7.0]];
        let y = [0, 0, 1, 0, 1, 1];
        let m = fit(&x, &y, &ClassifierKind::rf(), 1).unwrap();
        if let Fitted::Rf { trees } = &m.fitted {
            for t in trees {
                assert!(t.nodes.iter().all(|n| !matches!(n, forest::Node::Split { feature: 1, .. })));
            }
        }
    }

    #[test]
    fn accuracy_examples() {
        let truth = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let mut pred = truth;
        pred[3] = 0;
        assert_eq!(attack_accuracy(&pred, &truth).unwrap(), 0.9);
        assert_eq!(attack_accuracy(&truth, &truth).unwrap(), 1.0);
        let flipped: Vec<usize> = truth.iter().map(|v| 1 - v).collect();
        assert_eq!(attack_accuracy(&flipped, &truth).unwrap(), 0.0);
        assert!(matches!(attack_accuracy(&[], &[]), Err(Error::Precondition(_))));
        assert!(matches!(attack_accuracy(&[1], &[1, 0]), Err(Error::Shape(_))));
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = separable();
        for kind in [ClassifierKind::Mlp { hidden: vec![3], epochs: 5, lr: 0.01 }, ClassifierKind::rf(), ClassifierKind::lr()] {
            let m = fit(&x, &y, &kind, 2).unwrap();
            let back = AttackModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
        }
        let k: ClassifierKind = serde_json::from_str(r#"{"kind":"rf","n_trees":10}"#).unwrap();
        assert_eq!(k, ClassifierKind::Rf { n_trees: 10, max_depth: 150, min_leaf: 1 });
    }
}
