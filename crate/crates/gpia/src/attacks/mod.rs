//! The six attack pipelines A1..A6 and the comparison baselines.
//!
//! An attack trains one shadow model per sampled subgraph, turns each
//! model's outputs into a feature vector, fits a binary classifier on those
//! vectors and scores it on subgraphs drawn from the target graph.

mod baselines;
mod dataset;
mod result;
mod shadow;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierKind;
use crate::error::{precondition, Error, Result};
use crate::features::{AggregationMethod, AlignmentMethod};
use crate::gnn::GnnConfig;
use crate::graph::{Graph, PropertySpec};
use crate::rng::sub_rng;

pub use baselines::{
    aia_from_node_predictions, baseline_aia, baseline_dsad, baseline_kmeans, baseline_lossgap, baseline_meta,
    fit_threshold, kmeans2, sample_group_ratios, Threshold,
};
pub use dataset::{assemble_dataset, featurize, AttackDataset, FeatureLengths};
pub use result::{AttackResult, Prediction};
pub use shadow::{
    build_shadow_outputs, build_target_outputs, node_masks, target_accuracy, ModelOutput, NoDefense, OutputHook, SampleSource,
    Side, TargetOutputs,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackId {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
}

impl AttackId {
    pub const ALL: [AttackId; 6] = [AttackId::A1, AttackId::A2, AttackId::A3, AttackId::A4, AttackId::A5, AttackId::A6];

    pub fn access(self) -> Access {
        match self {
            AttackId::A1 | AttackId::A3 | AttackId::A5 => Access::White,
            _ => Access::Black,
        }
    }

    pub fn uses_partial(self) -> bool {
        !matches!(self, AttackId::A3 | AttackId::A4)
    }

    pub fn uses_shadow(self) -> bool {
        !matches!(self, AttackId::A1 | AttackId::A2)
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackId::A1 => "A1",
            AttackId::A2 => "A2",
            AttackId::A3 => "A3",
            AttackId::A4 => "A4",
            AttackId::A5 => "A5",
            AttackId::A6 => "A6",
        }
    }
}

impl FromStr for AttackId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AttackId::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown attack '{s}'")))
    }
}

impl fmt::Display for AttackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    White,
    Black,
}

/// Partial-to-shadow sample count ratio for A5/A6, written `p:s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MixRatio {
    pub partial: u32,
    pub shadow: u32,
}

impl MixRatio {
    pub const SWEEP: [MixRatio; 7] = [
        MixRatio { partial: 1, shadow: 10 },
        MixRatio { partial: 1, shadow: 4 },
        MixRatio { partial: 1, shadow: 2 },
        MixRatio { partial: 1, shadow: 1 },
        MixRatio { partial: 2, shadow: 1 },
        MixRatio { partial: 4, shadow: 1 },
        MixRatio { partial: 10, shadow: 1 },
    ];

    /// `(from partial, from shadow)` counts summing to `count`.
    pub fn split(self, count: usize) -> (usize, usize) {
        let total = f64::from(self.partial + self.shadow);
        let p = (count as f64 * f64::from(self.partial) / total).round() as usize;
        (p, count - p)
    }
}

impl Default for MixRatio {
    fn default() -> Self {
        MixRatio { partial: 1, shadow: 1 }
    }
}

impl FromStr for MixRatio {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("mix ratio '{s}' is not of the form p:s with positive integers"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let partial: u32 = a.trim().parse().map_err(|_| bad())?;
        let shadow: u32 = b.trim().parse().map_err(|_| bad())?;
        if partial == 0 || shadow == 0 {
            return Err(bad());
        }
        Ok(MixRatio { partial, shadow })
    }
}

impl TryFrom<String> for MixRatio {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MixRatio> for String {
    fn from(m: MixRatio) -> String {
        m.to_string()
    }
}

impl fmt::Display for MixRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.partial, self.shadow)
    }
}

/// A partial graph known to the adversary. When it was cut from the
/// target, `target_ids[i]` is the target id of local node `i`; test
/// subgraphs are then drawn from the remaining target nodes so that
/// attack train and test samples share neither nodes nor links.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialGraph {
    pub graph: Graph,
    pub target_ids: Option<Vec<usize>>,
}

impl PartialGraph {
    /// A partial graph with no known relation to the target's node ids.
    pub fn detached(graph: Graph) -> Self {
        PartialGraph { graph, target_ids: None }
    }

    /// A seeded random `fraction` of the target's nodes with their induced
    /// edges.
    pub fn from_target(target: &Graph, fraction: f64, seed: u64) -> Result<Self> {
        precondition(fraction > 0.0 && fraction < 1.0, || {
            format!("partial-graph fraction {fraction} outside (0, 1)")
        })?;
        let n = target.n();
        let keep = (fraction * n as f64).round() as usize;
        precondition(keep >= 1 && keep < n, || "partial graph would be empty or the whole target".into())?;
        let mut ids = rand::seq::index::sample(&mut sub_rng(seed, "partial-graph", 0), n, keep).into_vec();
        ids.sort_unstable();
        Ok(PartialGraph { graph: target.induced_subgraph(&ids)?, target_ids: Some(ids) })
    }

    /// Target ids not covered by this partial graph, ascending.
    pub fn complement(&self, target_n: usize) -> Option<Vec<usize>> {
        let ids = self.target_ids.as_ref()?;
        let mut inside = vec![false; target_n];
        for &i in ids {
            if i < target_n {
                inside[i] = true;
            }
        }
        Some((0..target_n).filter(|&i| !inside[i]).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryKnowledge {
    pub partial: Option<PartialGraph>,
    pub shadow: Option<Graph>,
    pub access: Access,
    pub mix_ratio: MixRatio,
}

impl AdversaryKnowledge {
    pub fn new(partial: Option<PartialGraph>, shadow: Option<Graph>, access: Access) -> Self {
        AdversaryKnowledge { partial, shadow, access, mix_ratio: MixRatio::default() }
    }

    pub fn with_mix_ratio(mut self, mix_ratio: MixRatio) -> Self {
        self.mix_ratio = mix_ratio;
        self
    }

    /// Checks the attack's knowledge row: which graphs it needs and which
    /// kind of model access.
    pub fn check(&self, id: AttackId) -> Result<()> {
        let fail = |reason: &str| Err(Error::Knowledge { attack: id.to_string(), reason: reason.into() });
        if self.partial.is_none() && self.shadow.is_none() {
            return fail("the adversary has neither a partial nor a shadow graph");
        }
        if id.uses_partial() && self.partial.is_none() {
            return fail("a partial graph is required");
        }
        if id.uses_shadow() && self.shadow.is_none() {
            return fail("a shadow graph is required");
        }
        if self.access != id.access() {
            return fail(match id.access() {
                Access::White => "white-box access is required",
                Access::Black => "the attack is defined for black-box access",
            });
        }
        Ok(())
    }
}

/// How positive and negative subgraphs are composed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Composition {
    /// Uniform node subsets, rejected until the flag matches.
    Uniform,
    /// Fixed lhs-group fractions for positive and negative samples of a
    /// node-level property.
    GroupRatio { positive: f64, negative: f64 },
}

fn default_size() -> usize {
    50
}
fn default_train_count() -> usize {
    700
}
fn default_test_count() -> usize {
    300
}
fn default_partial_fraction() -> f64 {
    0.25
}
fn default_node_train_frac() -> f64 {
    0.7
}
fn default_composition() -> Composition {
    Composition::Uniform
}

/// Subgraph counts and sizes for the attack's train and test sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPlan {
    /// Nodes per training subgraph; also the test size for A1/A2/A5/A6.
    #[serde(default = "default_size")]
    pub size: usize,
    #[serde(default = "default_train_count")]
    pub train_count: usize,
    #[serde(default = "default_test_count")]
    pub test_count: usize,
    /// Test subgraph size for A3/A4; `None` means `partial_fraction` of
    /// the target graph.
    #[serde(default)]
    pub test_size: Option<usize>,
    #[serde(default = "default_partial_fraction")]
    pub partial_fraction: f64,
    /// Fraction of each subgraph's nodes in the GNN training mask; the
    /// rest form the early-stopping mask.
    #[serde(default = "default_node_train_frac")]
    pub node_train_frac: f64,
    #[serde(default = "default_composition")]
    pub composition: Composition,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            size: default_size(),
            train_count: default_train_count(),
            test_count: default_test_count(),
            test_size: None,
            partial_fraction: default_partial_fraction(),
            node_train_frac: default_node_train_frac(),
            composition: default_composition(),
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        precondition(self.size >= 2, || format!("subgraph size {} must be at least 2", self.size))?;
        precondition(self.train_count >= 2 && self.test_count >= 1, || {
            "need at least 2 training and 1 test subgraph".into()
        })?;
        precondition(self.test_size.is_none_or(|s| s >= 2), || "test size must be at least 2".into())?;
        precondition(self.partial_fraction > 0.0 && self.partial_fraction < 1.0, || {
            format!("partial fraction {} outside (0, 1)", self.partial_fraction)
        })?;
        precondition(self.node_train_frac > 0.0 && self.node_train_frac < 1.0, || {
            format!("node train fraction {} outside (0, 1)", self.node_train_frac)
        })?;
        if let Composition::GroupRatio { positive, negative } = self.composition {
            precondition((0.0..=1.0).contains(&positive) && (0.0..=1.0).contains(&negative), || {
                "group ratios must lie in [0, 1]".into()
            })?;
        }
        Ok(())
    }
}

fn default_alignment() -> AlignmentMethod {
    AlignmentMethod::Sampling
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub id: AttackId,
    /// 1-based hidden layers whose embeddings feed white-box attacks.
    #[serde(default)]
    pub layers: Vec<usize>,
    pub aggregation: AggregationMethod,
    #[serde(default = "default_alignment")]
    pub alignment: AlignmentMethod,
    pub classifier: ClassifierKind,
    pub property: PropertySpec,
    #[serde(default)]
    pub plan: SamplingPlan,
}

impl AttackSpec {
    /// The best-performing defaults: max-pooled last-layer embeddings with
    /// a random forest for white-box attacks, concatenated posteriors with
    /// an MLP for black-box ones, t-SNE alignment for the transfer attacks.
    pub fn new(id: AttackId, property: PropertySpec) -> Self {
        let (layers, aggregation, classifier) = match id.access() {
            Access::White => (vec![2], AggregationMethod::EmbedMaxpool, ClassifierKind::rf()),
            Access::Black => (Vec::new(), AggregationMethod::PosteriorConcat, ClassifierKind::mlp()),
        };
        let alignment = if id.uses_partial() { AlignmentMethod::Sampling } else { AlignmentMethod::tsne() };
        AttackSpec { id, layers, aggregation, alignment, classifier, property, plan: SamplingPlan::default() }
    }

    pub fn with_plan(mut self, plan: SamplingPlan) -> Self {
        self.plan = plan;
        self
    }

    /// Checks the spec on its own and against the target configuration.
    pub fn validate(&self, cfg: &GnnConfig) -> Result<()> {
        self.property.validate()?;
        self.plan.validate()?;
        self.alignment.validate()?;
        self.classifier.validate()?;
        match self.id.access() {
            Access::White => {
                if self.layers.is_empty() {
                    return Err(Error::Config(format!("white-box attack {} needs at least one layer", self.id)));
                }
                if let Some(&bad) = self.layers.iter().find(|&&l| l == 0 || l > cfg.hidden_layers) {
                    return Err(Error::Config(format!(
                        "layer {bad} outside 1..={} hidden layers",
                        cfg.hidden_layers
                    )));
                }
                if self.aggregation.is_posterior() {
                    return Err(Error::Config(format!(
                        "white-box attack {} needs an embedding aggregation, got {}",
                        self.id,
                        self.aggregation.name()
                    )));
                }
            }
            Access::Black => {
                if !self.aggregation.is_posterior() {
                    return Err(Error::Config(format!(
                        "black-box attack {} needs a posterior aggregation, got {}",
                        self.id,
                        self.aggregation.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

mod run;
pub use run::{execute, run_attack, run_attack_with, AttackRun};
