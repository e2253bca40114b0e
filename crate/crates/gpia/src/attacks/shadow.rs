//! Sampling subgraphs, training one model per subgraph and recording what
//! the adversary observes of it.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Access, AdversaryKnowledge, AttackSpec, Composition, SamplingPlan};
use crate::error::{Error, Result};
use crate::gnn::{forward, train, GnnConfig, GnnModel, TrainReport};
use crate::graph::{
    overlap_report, sample_by_group_ratio, sample_subgraphs, Graph, OverlapReport, PropertySpec, SampleFlag,
    SubgraphSample,
};
use crate::rng::{sub_rng, sub_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Partial,
    Shadow,
    Target,
}

/// Attack training side (shadow models) or test side (target models).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Train,
    Test,
}

impl Side {
    fn tag(self) -> &'static str {
        match self {
            Side::Train => "train",
            Side::Test => "test",
        }
    }
}

/// One trained model and what the adversary sees of it.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelOutput {
    pub index: usize,
    pub source: SampleSource,
    /// Node ids refer to the graph the sample was drawn from.
    pub sample: SubgraphSample,
    /// `n × classes`; may be perturbed by a defense.
    pub posteriors: Array2<f64>,
    /// Embeddings of the attack's layers, in the spec's order. Empty for
    /// black-box attacks.
    pub embeddings: Vec<Array2<f64>>,
    pub labels: Vec<usize>,
    pub property_values: Vec<i64>,
    /// Local ids of the nodes held out from GNN training.
    pub test_mask: Vec<usize>,
    pub train_loss: f64,
    pub test_loss: f64,
}

impl ModelOutput {
    /// Train loss minus held-out loss at the returned epoch.
    pub fn loss_gap(&self) -> f64 {
        self.train_loss - self.test_loss
    }

    pub fn label(&self) -> usize {
        self.sample.flag.label()
    }
}

/// Lets a defense change how models are trained and what is released.
pub trait OutputHook: Sync {
    fn train(
        &self,
        g: &Graph,
        cfg: &GnnConfig,
        train_mask: &[usize],
        test_mask: &[usize],
        _side: Side,
        _seed: u64,
    ) -> Result<(GnnModel, TrainReport)> {
        train(g, cfg, train_mask, test_mask)
    }

    fn observe(&self, _out: &mut ModelOutput, _side: Side, _seed: u64) -> Result<()> {
        Ok(())
    }
}

/// Releases model outputs unchanged.
pub struct NoDefense;

impl OutputHook for NoDefense {}

fn draw(
    g: &Graph,
    count: usize,
    size: usize,
    plan: &SamplingPlan,
    p: &PropertySpec,
    seed: u64,
    tag: &str,
) -> Result<Vec<SubgraphSample>> {
    let (pos, neg) = (count - count / 2, count / 2);
    let mut out = Vec::with_capacity(count);
    for (want, n, frac) in [(SampleFlag::Positive, pos, 0), (SampleFlag::Negative, neg, 1)] {
        if n == 0 {
            continue;
        }
        let s = sub_seed(seed, tag, frac);
        out.extend(match plan.composition {
            Composition::Uniform => sample_subgraphs(g, n, size, want, p, s)?,
            Composition::GroupRatio { positive, negative } => {
                let f = if want.is_positive() { positive } else { negative };
                sample_by_group_ratio(g, n, size, f, want, p, s)?
            }
        });
    }
    Ok(out)
}

/// Seeded train/test node split with `frac` of the nodes in training.
pub fn node_masks(n: usize, frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut sub_rng(seed, "node-mask", 0));
    let k = ((n as f64 * frac).round() as usize).clamp(1, n - 1);
    let (mut a, mut b) = (ids[..k].to_vec(), ids[k..].to_vec());
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

struct ObserveCtx<'a> {
    cfg: &'a GnnConfig,
    spec: &'a AttackSpec,
    hook: &'a dyn OutputHook,
    side: Side,
    seed: u64,
}

/// Trains one model per sample (in parallel; results keep sample order).
fn observe(
    ctx: &ObserveCtx<'_>,
    g: &Graph,
    samples: Vec<SubgraphSample>,
    source: SampleSource,
    first_index: usize,
) -> Result<Vec<ModelOutput>> {
    let tag = ctx.side.tag();
    samples
        .into_par_iter()
        .enumerate()
        .map(|(k, sample)| {
            let index = first_index + k;
            let sg = sample.materialize(g)?;
            let (tr, te) = node_masks(sg.n(), ctx.spec.plan.node_train_frac, sub_seed(ctx.seed, tag, index as u64));
            let train_seed = sub_seed(ctx.seed, &format!("defense-train-{tag}"), index as u64);
            let (model, report) = ctx.hook.train(&sg, ctx.cfg, &tr, &te, ctx.side, train_seed)?;
            let emb = forward(&model, &sg, None)?;
            let embeddings = match ctx.spec.id.access() {
                Access::White => ctx.spec.layers.iter().map(|&l| emb.z[l - 1].clone()).collect(),
                Access::Black => Vec::new(),
            };
            let best = report.best_epoch - 1;
            let mut out = ModelOutput {
                index,
                source,
                property_values: sg.property_column(),
                labels: sg.labels().to_vec(),
                sample,
                posteriors: emb.o,
                embeddings,
                test_mask: te,
                train_loss: report.train_loss[best],
                test_loss: report.test_loss[best],
            };
            let observe_seed = sub_seed(ctx.seed, &format!("defense-observe-{tag}"), index as u64);
            ctx.hook.observe(&mut out, ctx.side, observe_seed)?;
            Ok(out)
        })
        .collect()
}

/// Trains the attack's shadow models: balanced subgraphs from the partial
/// graph (A1/A2), the shadow graph (A3/A4) or both at the mix ratio
/// (A5/A6), one model per subgraph with the target's configuration.
pub fn build_shadow_outputs(
    k: &AdversaryKnowledge,
    spec: &AttackSpec,
    cfg: &GnnConfig,
    seed: u64,
    hook: &dyn OutputHook,
) -> Result<Vec<ModelOutput>> {
    k.check(spec.id)?;
    spec.validate(cfg)?;
    let plan = &spec.plan;
    let (n_partial, n_shadow) = match (spec.id.uses_partial(), spec.id.uses_shadow()) {
        (true, true) => k.mix_ratio.split(plan.train_count),
        (true, false) => (plan.train_count, 0),
        _ => (0, plan.train_count),
    };
    let ctx = ObserveCtx { cfg, spec, hook, side: Side::Train, seed };
    let mut out = Vec::with_capacity(plan.train_count);
    if n_partial > 0 {
        let g = &k.partial.as_ref().expect("checked").graph;
        let samples = draw(g, n_partial, plan.size, plan, &spec.property, seed, "partial-samples")?;
        out.extend(observe(&ctx, g, samples, SampleSource::Partial, 0)?);
    }
    if n_shadow > 0 {
        let g = k.shadow.as_ref().expect("checked");
        let samples = draw(g, n_shadow, plan.size, plan, &spec.property, seed, "shadow-samples")?;
        out.extend(observe(&ctx, g, samples, SampleSource::Shadow, n_partial)?);
    }
    Ok(out)
}

/// Target-side models plus the overlap between attack train and test
/// subgraphs, measured in target node ids when that is possible.
#[derive(Clone, Debug)]
pub struct TargetOutputs {
    pub outputs: Vec<ModelOutput>,
    pub overlap: Option<OverlapReport>,
}

fn remap(s: &SubgraphSample, ids: &[usize]) -> SubgraphSample {
    SubgraphSample { node_ids: s.node_ids.iter().map(|&i| ids[i]).collect(), ..s.clone() }
}

/// Trains the models the attack is evaluated on: balanced subgraphs of the
/// target graph. When the partial graph was cut from the target, they are
/// drawn from the remaining nodes only.
pub fn build_target_outputs(
    k: &AdversaryKnowledge,
    spec: &AttackSpec,
    target: &Graph,
    cfg: &GnnConfig,
    shadow: &[ModelOutput],
    seed: u64,
    hook: &dyn OutputHook,
) -> Result<TargetOutputs> {
    let plan = &spec.plan;
    let size = if spec.id.uses_partial() {
        plan.size
    } else {
        plan.test_size
            .unwrap_or_else(|| (plan.partial_fraction * target.n() as f64).round() as usize)
    };
    let partial = k.partial.as_ref().filter(|_| spec.id.uses_partial());
    let pool_ids = partial.and_then(|p| p.complement(target.n()));
    let pool = match &pool_ids {
        Some(ids) => {
            if ids.len() < size {
                return Err(Error::Precondition(format!(
                    "only {} target nodes lie outside the partial graph, need {size}",
                    ids.len()
                )));
            }
            target.induced_subgraph(ids)?
        }
        None => target.clone(),
    };
    let samples = draw(&pool, plan.test_count, size, plan, &spec.property, seed, "target-samples")?;
    let overlap = match (partial.and_then(|p| p.target_ids.as_ref()), &pool_ids) {
        (Some(pids), Some(tids)) => {
            let train: Vec<SubgraphSample> = shadow
                .iter()
                .filter(|o| o.source == SampleSource::Partial)
                .map(|o| remap(&o.sample, pids))
                .collect();
            let test: Vec<SubgraphSample> = samples.iter().map(|s| remap(s, tids)).collect();
            Some(overlap_report(&train, &test))
        }
        _ => None,
    };
    let ctx = ObserveCtx { cfg, spec, hook, side: Side::Test, seed };
    let outputs = observe(&ctx, &pool, samples, SampleSource::Target, 0)?;
    Ok(TargetOutputs { outputs, overlap })
}

/// Mean held-out node accuracy of argmax over the observed posteriors.
pub fn target_accuracy(outputs: &[ModelOutput]) -> Option<f64> {
    let accs: Vec<f64> = outputs
        .iter()
        .filter(|o| !o.test_mask.is_empty())
        .map(|o| {
            let correct = o
                .test_mask
                .iter()
                .filter(|&&i| crate::gnn::argmax(o.posteriors.row(i).iter().copied()) == o.labels[i])
                .count();
            correct as f64 / o.test_mask.len() as f64
        })
        .collect();
    (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_partition_the_nodes() {
        let (a, b) = node_masks(10, 0.7, 4);
        assert_eq!((a.len(), b.len()), (7, 3));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(node_masks(2, 0.99, 0).1.len(), 1);
    }
}
