//! The end-to-end attack pipeline.

use serde::Serialize;

use super::dataset::{assemble_dataset, AttackDataset};
use super::result::{AttackResult, Prediction};
use super::shadow::{build_shadow_outputs, build_target_outputs, target_accuracy, ModelOutput, NoDefense, OutputHook};
use super::{Access, AdversaryKnowledge, AttackSpec, MixRatio};
use crate::classifiers::{attack_accuracy, fit, predict, AttackModel};
use crate::error::Result;
use crate::features::to_matrix;
use crate::fingerprint::config_hash;
use crate::gnn::GnnConfig;
use crate::graph::{graph_fingerprint, Graph};
use crate::rng::sub_seed;

/// Everything an attack run produced, for baselines and diagnostics.
#[derive(Clone, Debug)]
pub struct AttackRun {
    pub result: AttackResult,
    pub dataset: AttackDataset,
    pub shadow: Vec<ModelOutput>,
    pub target: Vec<ModelOutput>,
    pub model: AttackModel,
}

#[derive(Serialize)]
struct HashInput<'a> {
    spec: &'a AttackSpec,
    target_cfg: &'a GnnConfig,
    access: Access,
    mix_ratio: MixRatio,
    partial: Option<u64>,
    shadow: Option<u64>,
    target: u64,
}

/// Hash of everything that determines an attack's result apart from the
/// seed.
pub(crate) fn attack_hash(
    spec: &AttackSpec,
    k: &AdversaryKnowledge,
    target: &Graph,
    cfg: &GnnConfig,
    extra: &impl Serialize,
) -> Result<String> {
    let input = HashInput {
        spec,
        target_cfg: cfg,
        access: k.access,
        mix_ratio: k.mix_ratio,
        partial: k.partial.as_ref().map(|p| graph_fingerprint(&p.graph)),
        shadow: k.shadow.as_ref().map(graph_fingerprint),
        target: graph_fingerprint(target),
    };
    config_hash(&(input, extra))
}

/// Runs the full pipeline with outputs passed through `hook`.
pub fn execute(
    spec: &AttackSpec,
    k: &AdversaryKnowledge,
    target: &Graph,
    cfg: &GnnConfig,
    seed: u64,
    hook: &dyn OutputHook,
) -> Result<AttackRun> {
    k.check(spec.id).map_err(|e| e.in_stage("knowledge"))?;
    spec.validate(cfg).map_err(|e| e.in_stage("spec"))?;
    let shadow = build_shadow_outputs(k, spec, cfg, seed, hook).map_err(|e| e.in_stage("shadow"))?;
    let t = build_target_outputs(k, spec, target, cfg, &shadow, seed, hook).map_err(|e| e.in_stage("target"))?;
    let mut dataset = assemble_dataset(&shadow, &t.outputs, spec, sub_seed(seed, "align", 0))
        .map_err(|e| e.in_stage("dataset"))?;
    dataset.overlap = t.overlap;

    let xtr = to_matrix(&dataset.train)?;
    let xte = to_matrix(&dataset.test)?;
    let model = fit(&xtr, &dataset.train_labels, &spec.classifier, sub_seed(seed, "classifier", 0))
        .map_err(|e| e.in_stage("classifier"))?;
    let (labels, scores) = predict(&model, &xte).map_err(|e| e.in_stage("classifier"))?;
    let accuracy = attack_accuracy(&labels, &dataset.test_labels)?;
    let predictions = labels
        .iter()
        .zip(&scores)
        .zip(&dataset.test_labels)
        .enumerate()
        .map(|(sample, ((&predicted, &score), &truth))| Prediction { sample, truth, predicted, score })
        .collect();
    let result = AttackResult {
        attack_id: spec.id.to_string(),
        layers: spec.layers.clone(),
        aggregation: spec.aggregation.name().into(),
        alignment: dataset.alignment.unwrap_or("none").into(),
        classifier: spec.classifier.name().into(),
        accuracy,
        target_accuracy: target_accuracy(&t.outputs),
        n_test: labels.len(),
        seed,
        config_hash: attack_hash(spec, k, target, cfg, &())?,
        predictions,
    };
    Ok(AttackRun { result, dataset, shadow, target: t.outputs, model })
}

/// Runs the attack with outputs passed through `hook` and returns only
/// the result.
pub fn run_attack_with(
    spec: &AttackSpec,
    k: &AdversaryKnowledge,
    target: &Graph,
    cfg: &GnnConfig,
    seed: u64,
    hook: &dyn OutputHook,
) -> Result<AttackResult> {
    execute(spec, k, target, cfg, seed, hook).map(|r| r.result)
}

/// Shadow outputs, dataset, classifier and evaluation on target subgraphs.
pub fn run_attack(
    spec: &AttackSpec,
    k: &AdversaryKnowledge,
    target: &Graph,
    cfg: &GnnConfig,
    seed: u64,
) -> Result<AttackResult> {
    run_attack_with(spec, k, target, cfg, seed, &NoDefense)
}
