//! Output perturbation defenses, a noisy-gradient training baseline, and
//! their effect on attack and target accuracy.

use std::path::Path;

use ndarray::Array2;
use rand::distr::{Distribution, Open01};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::attacks::{execute, Access, AdversaryKnowledge, AttackSpec, ModelOutput, OutputHook, Side};
use crate::error::{precondition, Error, Result};
use crate::fingerprint::config_hash;
use crate::gnn::{train_with_hook, GnnConfig, GnnModel, TrainReport};
use crate::graph::Graph;
use crate::rng::{sub_rng, Rng};

/// Noise scales swept by default for the noise methods.
pub const NOISE_SWEEP: [f64; 5] = [0.1, 0.5, 1.0, 5.0, 10.0];
/// Truncation ratios swept by default.
pub const TRUNCATION_SWEEP: [f64; 5] = [0.01, 0.05, 0.1, 0.2, 0.3];

fn default_clip() -> f64 {
    1.0
}

/// A defense and exactly the parameters it uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DefenseMethod {
    /// Laplace noise of scale `b` on every released posterior.
    NoisyPosterior { b: f64 },
    /// Laplace noise of scale `b` on the observed embeddings. `target_layers`
    /// limits it to some of the attack's layers; `None` means all.
    NoisyEmbedding {
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_layers: Option<Vec<usize>>,
    },
    /// Each node keeps a random `1 - r` share of its embedding dimensions.
    Truncation { r: f64 },
    /// Clipped gradients with Laplace noise of scale `clip / epsilon`.
    DpGradient {
        epsilon: f64,
        #[serde(default = "default_clip")]
        clip: f64,
    },
    /// Only the `k` largest posteriors of each node are released.
    TopkPosterior { k: usize },
    /// Only the predicted label is released, as a one-hot row.
    LabelOnly {},
}

impl DefenseMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DefenseMethod::NoisyPosterior { .. } => "noisy-posterior",
            DefenseMethod::NoisyEmbedding { .. } => "noisy-embedding",
            DefenseMethod::Truncation { .. } => "truncation",
            DefenseMethod::DpGradient { .. } => "dp-gradient",
            DefenseMethod::TopkPosterior { .. } => "topk-posterior",
            DefenseMethod::LabelOnly {} => "label-only",
        }
    }

    /// The swept parameter: `b`, `r`, `epsilon` or `k`.
    pub fn param(&self) -> Option<f64> {
        match *self {
            DefenseMethod::NoisyPosterior { b } | DefenseMethod::NoisyEmbedding { b, .. } => Some(b),
            DefenseMethod::Truncation { r } => Some(r),
            DefenseMethod::DpGradient { epsilon, .. } => Some(epsilon),
            DefenseMethod::TopkPosterior { k } => Some(k as f64),
            DefenseMethod::LabelOnly {} => None,
        }
    }

    /// Gradient noise at `epsilon = 1 / b`.
    pub fn dp_from_scale(b: f64) -> Self {
        DefenseMethod::DpGradient { epsilon: 1.0 / b, clip: default_clip() }
    }

    /// Access modes whose outputs this method perturbs.
    pub fn supports(&self, access: Access) -> bool {
        match self {
            DefenseMethod::NoisyEmbedding { .. } | DefenseMethod::Truncation { .. } => access == Access::White,
            DefenseMethod::NoisyPosterior { .. } | DefenseMethod::TopkPosterior { .. } | DefenseMethod::LabelOnly {} => {
                access == Access::Black
            }
            DefenseMethod::DpGradient { .. } => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self {
            DefenseMethod::NoisyPosterior { b } | DefenseMethod::NoisyEmbedding { b, .. } if !(*b > 0.0 && b.is_finite()) => {
                bad(format!("noise scale b = {b} must be positive"))
            }
            DefenseMethod::NoisyEmbedding { target_layers: Some(l), .. } if l.is_empty() || l.contains(&0) => {
                bad("target_layers must be non-empty and 1-based".into())
            }
            DefenseMethod::Truncation { r } if !(*r > 0.0 && *r < 1.0) => bad(format!("truncation ratio r = {r} outside (0, 1)")),
            DefenseMethod::DpGradient { epsilon, clip } if !(*epsilon > 0.0 && *clip > 0.0 && clip.is_finite()) => {
                bad(format!("dp-gradient needs epsilon > 0 and clip > 0, got {epsilon} and {clip}"))
            }
            DefenseMethod::TopkPosterior { k } if *k == 0 => bad("top-k needs k >= 1".into()),
            _ => Ok(()),
        }
    }
}

/// Serialized flat: the method's tag and parameters beside `target_only`
/// and `seed`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefenseSpec {
    #[serde(flatten)]
    pub method: DefenseMethod,
    /// Defend only the target side; the adversary's shadow models stay clean.
    #[serde(default)]
    pub target_only: bool,
    #[serde(default)]
    pub seed: u64,
}

impl<'de> Deserialize<'de> for DefenseSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut map = serde_json::Map::deserialize(d)?;
        let target_only = map.remove("target_only").map(serde_json::from_value).transpose();
        let seed = map.remove("seed").map(serde_json::from_value).transpose();
        let target_only = target_only.map_err(D::Error::custom)?.unwrap_or(false);
        let seed = seed.map_err(D::Error::custom)?.unwrap_or(0);
        let method = serde_json::from_value(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(DefenseSpec { method, target_only, seed })
    }
}

impl DefenseSpec {
    pub fn new(method: DefenseMethod) -> Self {
        DefenseSpec { method, target_only: false, seed: 0 }
    }

    pub fn target_only(mut self) -> Self {
        self.target_only = true;
        self
    }

    fn applies(&self, side: Side) -> bool {
        !self.target_only || side == Side::Test
    }
}

/// Standard Laplace draw scaled by `b`, by inverting the CDF.
fn laplace(rng: &mut Rng, b: f64) -> f64 {
    let u: f64 = Open01.sample(rng);
    let u = u - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

fn add_laplace(m: &mut Array2<f64>, b: f64, rng: &mut Rng) {
    m.iter_mut().for_each(|v| *v += laplace(rng, b));
}

/// Adds i.i.d. Laplace(0, b) noise to every entry.
pub fn laplace_noise(m: &Array2<f64>, b: f64, seed: u64) -> Result<Array2<f64>> {
    precondition(b > 0.0 && b.is_finite(), || format!("laplace scale b = {b} must be positive"))?;
    let mut out = m.clone();
    add_laplace(&mut out, b, &mut sub_rng(seed, "laplace", 0));
    Ok(out)
}

/// Length kept by truncation at ratio `r`: `floor(d (1 - r))`.
pub fn truncated_len(d: usize, r: f64) -> usize {
    (d as f64 * (1.0 - r)).floor() as usize
}

/// Each node keeps its own random `floor(d (1 - r))` dimensions, in
/// their original order.
pub fn truncate_embeddings(z: &Array2<f64>, r: f64, seed: u64) -> Result<Array2<f64>> {
    precondition(r > 0.0 && r < 1.0, || format!("truncation ratio r = {r} outside (0, 1)"))?;
    let d = z.ncols();
    let keep = truncated_len(d, r);
    precondition(keep >= 1, || format!("truncating {d} dimensions at r = {r} leaves none"))?;
    let mut rng = sub_rng(seed, "truncate", 0);
    let mut out = Array2::zeros((z.nrows(), keep));
    for (i, row) in z.rows().into_iter().enumerate() {
        let mut dims = index::sample(&mut rng, d, keep).into_vec();
        dims.sort_unstable();
        for (j, &c) in dims.iter().enumerate() {
            out[[i, j]] = row[c];
        }
    }
    Ok(out)
}

/// Zeroes all but the `k` largest entries of each row; ties keep the lower
/// index.
pub fn topk_posteriors(o: &Array2<f64>, k: usize) -> Result<Array2<f64>> {
    precondition(k >= 1 && k <= o.ncols(), || format!("k = {k} outside 1..={}", o.ncols()))?;
    let mut out = Array2::zeros(o.raw_dim());
    for (i, row) in o.rows().into_iter().enumerate() {
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &c in &order[..k] {
            out[[i, c]] = row[c];
        }
    }
    Ok(out)
}

/// Per-row argmax.
pub fn label_only(o: &Array2<f64>) -> Vec<usize> {
    o.rows().into_iter().map(|r| crate::gnn::argmax(r.iter().copied())).collect()
}

fn one_hot(labels: &[usize], classes: usize) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), classes));
    for (i, &c) in labels.iter().enumerate() {
        out[[i, c]] = 1.0;
    }
    out
}

/// Trains with the full gradient clipped to norm `clip` and perturbed by
/// Laplace(0, clip / epsilon) per coordinate before every step.
pub fn dp_train(
    g: &Graph,
    cfg: &GnnConfig,
    train_mask: &[usize],
    test_mask: &[usize],
    epsilon: f64,
    clip: f64,
    seed: u64,
) -> Result<(GnnModel, TrainReport)> {
    precondition(epsilon > 0.0, || format!("epsilon = {epsilon} must be positive"))?;
    precondition(clip > 0.0 && clip.is_finite(), || format!("clip = {clip} must be positive"))?;
    let mut rng = sub_rng(seed, "dp-gradient", 0);
    let b = clip / epsilon;
    train_with_hook(g, cfg, train_mask, test_mask, &mut |_, grad| {
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > clip { clip / norm } else { 1.0 };
        for v in grad.iter_mut() {
            *v = *v * scale + laplace(&mut rng, b);
        }
    })
}

impl OutputHook for DefenseSpec {
    fn train(
        &self,
        g: &Graph,
        cfg: &GnnConfig,
        train_mask: &[usize],
        test_mask: &[usize],
        side: Side,
        seed: u64,
    ) -> Result<(GnnModel, TrainReport)> {
        match self.method {
            DefenseMethod::DpGradient { epsilon, clip } if self.applies(side) => {
                dp_train(g, cfg, train_mask, test_mask, epsilon, clip, crate::rng::sub_seed(seed, "defense", self.seed))
            }
            _ => crate::gnn::train(g, cfg, train_mask, test_mask),
        }
    }

    fn observe(&self, out: &mut ModelOutput, side: Side, seed: u64) -> Result<()> {
        if !self.applies(side) {
            return Ok(());
        }
        let seed = crate::rng::sub_seed(seed, "defense", self.seed);
        match &self.method {
            DefenseMethod::NoisyPosterior { b } => {
                add_laplace(&mut out.posteriors, *b, &mut sub_rng(seed, "laplace", 0));
            }
            DefenseMethod::NoisyEmbedding { b, target_layers } => {
                for (k, z) in out.embeddings.iter_mut().enumerate() {
                    if target_layers.as_ref().is_none_or(|l| l.contains(&(k + 1))) {
                        add_laplace(z, *b, &mut sub_rng(seed, "laplace", k as u64));
                    }
                }
            }
            DefenseMethod::Truncation { r } => {
                for (k, z) in out.embeddings.iter_mut().enumerate() {
                    *z = truncate_embeddings(z, *r, crate::rng::sub_seed(seed, "truncation", k as u64))?;
                }
            }
            DefenseMethod::TopkPosterior { k } => out.posteriors = topk_posteriors(&out.posteriors, *k)?,
            DefenseMethod::LabelOnly {} => out.posteriors = one_hot(&label_only(&out.posteriors), out.posteriors.ncols()),
            DefenseMethod::DpGradient { .. } => {}
        }
        Ok(())
    }
}

/// Attack and target accuracy under a defense.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefenseResult {
    pub method: String,
    pub param: Option<f64>,
    pub attack_id: String,
    pub attack_acc: f64,
    pub target_acc: f64,
    pub seed: u64,
    pub fingerprint: String,
}

/// Runs the attack with `defense` applied to every output the adversary
/// observes.
pub fn evaluate_defense(
    defense: &DefenseSpec,
    spec: &AttackSpec,
    k: &AdversaryKnowledge,
    target: &Graph,
    cfg: &GnnConfig,
    seed: u64,
) -> Result<DefenseResult> {
    defense.method.validate()?;
    let access = spec.id.access();
    if !defense.method.supports(access) {
        return Err(Error::Usage(format!(
            "{} does not apply to {} attack {}",
            defense.method.name(),
            match access {
                Access::White => "white-box",
                Access::Black => "black-box",
            },
            spec.id
        )));
    }
    let run = execute(spec, k, target, cfg, seed, defense)?;
    Ok(DefenseResult {
        method: defense.method.name().into(),
        param: defense.method.param(),
        attack_id: spec.id.to_string(),
        attack_acc: run.result.accuracy,
        target_acc: run.result.target_accuracy.unwrap_or(0.0),
        seed,
        fingerprint: config_hash(&(defense, &run.result.config_hash))?,
    })
}

/// Writes `method,param,attack_id,attack_acc,target_acc,seed` rows.
pub fn write_defense_csv(path: impl AsRef<Path>, rows: &[DefenseResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "param", "attack_id", "attack_acc", "target_acc", "seed"])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.param.map(|p| p.to_string()).unwrap_or_default(),
            r.attack_id.clone(),
            r.attack_acc.to_string(),
            r.target_acc.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
