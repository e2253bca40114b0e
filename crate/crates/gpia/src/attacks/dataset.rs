//! Turning model outputs into labelled attack feature vectors.

use serde::{Deserialize, Serialize};

use super::shadow::ModelOutput;
use super::{Access, AttackSpec};
use crate::error::{precondition, Result};
use crate::features::{aggregate_embeddings, aggregate_posteriors, align, FeatureVector};
use crate::graph::OverlapReport;

/// Feature lengths before and after alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLengths {
    pub train: usize,
    pub test: usize,
    pub aligned: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackDataset {
    pub train: Vec<FeatureVector>,
    pub train_labels: Vec<usize>,
    pub test: Vec<FeatureVector>,
    pub test_labels: Vec<usize>,
    pub overlap: Option<OverlapReport>,
    pub lengths: FeatureLengths,
    /// Name of the alignment method, when one was needed.
    pub alignment: Option<&'static str>,
}

/// One aggregated feature vector per output, in output order.
pub fn featurize(outputs: &[ModelOutput], spec: &AttackSpec) -> Result<Vec<FeatureVector>> {
    outputs
        .iter()
        .map(|o| {
            let v = match spec.id.access() {
                Access::White => {
                    let zs: Vec<_> = o.embeddings.iter().collect();
                    aggregate_embeddings(&zs, spec.aggregation)?.with_layers(spec.layers.clone())
                }
                Access::Black => aggregate_posteriors(&o.posteriors, spec.aggregation)?,
            };
            Ok(v.with_sample(o.index as u64))
        })
        .collect()
}

/// Aggregates both sides and aligns them when their lengths differ.
/// Labels are the samples' property flags.
pub fn assemble_dataset(
    train: &[ModelOutput],
    test: &[ModelOutput],
    spec: &AttackSpec,
    seed: u64,
) -> Result<AttackDataset> {
    precondition(!train.is_empty() && !test.is_empty(), || "attack dataset needs outputs on both sides".into())?;
    let tr = featurize(train, spec)?;
    let te = featurize(test, spec)?;
    let (a, b) = (tr[0].len(), te[0].len());
    let uniform = tr.iter().all(|v| v.len() == a) && te.iter().all(|v| v.len() == b);
    let (tr, te, alignment) = if a == b && uniform {
        (tr, te, None)
    } else {
        let (x, y) = align(&tr, &te, &spec.alignment, seed)?;
        (x, y, Some(spec.alignment.name()))
    };
    Ok(AttackDataset {
        lengths: FeatureLengths { train: a, test: b, aligned: tr[0].len() },
        train_labels: train.iter().map(ModelOutput::label).collect(),
        test_labels: test.iter().map(ModelOutput::label).collect(),
        train: tr,
        test: te,
        overlap: None,
        alignment,
    })
}
