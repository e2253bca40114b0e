//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::ElementKind;
use crate::attacks::{Access, AttackId, AttackSpec, MixRatio, SamplingPlan};
use crate::classifiers::ClassifierKind;
use crate::defenses::DefenseSpec;
use crate::error::{Error, Result};
use crate::features::{AggregationMethod, AlignmentMethod};
use crate::gnn::GnnConfig;
use crate::graph::{PropertySpec, SyntheticConfig};

/// Where a graph comes from: generated, or a directory holding
/// `edges.tsv` and `features.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSource {
    Synthetic(SyntheticConfig),
    Path(PathBuf),
}

/// The adversary's partial graph: a seeded fraction of the target's
/// nodes, or a separate graph directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PartialSource {
    Fraction(f64),
    Path(PathBuf),
}

/// An attack with optional overrides of the defaults for its id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackEntry {
    pub id: AttackId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SamplingPlan>,
}

impl AttackEntry {
    pub fn resolve(&self, property: &PropertySpec) -> AttackSpec {
        let mut s = AttackSpec::new(self.id, property.clone());
        if let Some(l) = &self.layers {
            s.layers = l.clone();
        }
        if let Some(a) = self.aggregation {
            s.aggregation = a;
        }
        if let Some(a) = &self.alignment {
            s.alignment = a.clone();
        }
        if let Some(c) = &self.classifier {
            s.classifier = c.clone();
        }
        if let Some(p) = &self.plan {
            s.plan = p.clone();
        }
        s
    }
}

/// Which defense a noise-scale sweep point applies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseTarget {
    /// Noisy posteriors for black-box attacks, noisy embeddings for
    /// white-box ones.
    #[default]
    Output,
    /// Noisy gradients at `epsilon = 1 / b`.
    Gradient,
}

/// Sweep axes; the sweep runs their cross-product. Noise scales and
/// truncation ratios together form one defense axis.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_scales: Option<Vec<f64>>,
    pub noise_target: NoiseTarget,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_ratios: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mix_ratios: Option<Vec<MixRatio>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_ratios: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    /// Influence elements scored, drawn at random when there are more.
    pub max_elements: usize,
    pub element: ElementKind,
    /// Share of nodes the analysed model trains on.
    pub train_fraction: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { max_elements: 200, element: ElementKind::Node, train_fraction: 0.7 }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<PartialSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow_graph: Option<GraphSource>,
    #[serde(default)]
    pub gnn: GnnConfig,
    pub property: PropertySpec,
    #[serde(default)]
    pub attacks: Vec<AttackEntry>,
    #[serde(default)]
    pub defenses: Vec<DefenseSpec>,
    #[serde(default)]
    pub mix_ratio: MixRatio,
    #[serde(default)]
    pub sweep: SweepAxes,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn check_dir(p: &Path, what: &str, errs: &mut Vec<String>) {
    for f in ["edges.tsv", "features.csv"] {
        if !p.join(f).is_file() {
            errs.push(format!("{what}: {} does not exist", p.join(f).display()));
        }
    }
}

fn check_source(src: &GraphSource, what: &str, errs: &mut Vec<String>) {
    match src {
        GraphSource::Synthetic(s) => {
            if let Err(e) = s.validate() {
                errs.push(format!("{what}: {e}"));
            }
        }
        GraphSource::Path(p) => check_dir(p, what, errs),
    }
}

fn check_axis<T>(axis: &Option<Vec<T>>, name: &str, ok: impl Fn(&T) -> bool, rule: &str, errs: &mut Vec<String>) {
    if let Some(v) = axis {
        if v.is_empty() {
            errs.push(format!("sweep.{name} is empty"));
        } else if !v.iter().all(ok) {
            errs.push(format!("sweep.{name}: every value must {rule}"));
        }
    }
}

impl ExperimentConfig {
    /// Parses strictly; unknown fields are errors.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, parses, resolves relative paths against the file's directory
    /// and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let GraphSource::Path(p) = &mut self.graph {
            fix(p);
        }
        if let Some(GraphSource::Path(p)) = &mut self.shadow_graph {
            fix(p);
        }
        if let Some(PartialSource::Path(p)) = &mut self.partial {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn attack_specs(&self) -> Vec<AttackSpec> {
        self.attacks.iter().map(|a| a.resolve(&self.property)).collect()
    }

    /// Every violated constraint at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        check_source(&self.graph, "graph", &mut errs);
        if let Some(s) = &self.shadow_graph {
            check_source(s, "shadow_graph", &mut errs);
        }
        match &self.partial {
            Some(PartialSource::Fraction(f)) if !(*f > 0.0 && *f < 1.0) => {
                errs.push(format!("partial: fraction {f} outside (0, 1)"));
            }
            Some(PartialSource::Path(p)) => check_dir(p, "partial", &mut errs),
            _ => {}
        }
        if let Err(e) = self.gnn.validate() {
            errs.push(format!("gnn: {e}"));
        }
        if let Err(e) = self.property.validate() {
            errs.push(format!("property: {e}"));
        }
        for spec in self.attack_specs() {
            let id = spec.id;
            if id.uses_partial() && self.partial.is_none() {
                errs.push(format!("taxonomy: {id} needs a partial graph"));
            }
            if id.uses_shadow() && self.shadow_graph.is_none() {
                errs.push(format!("taxonomy: {id} needs a shadow graph"));
            }
            if let Err(e) = spec.validate(&self.gnn) {
                errs.push(format!("attack {id}: {e}"));
            }
        }
        for d in &self.defenses {
            if let Err(e) = d.method.validate() {
                errs.push(format!("defense {}: {e}", d.method.name()));
            }
            if !self.attacks.is_empty() && !self.attacks.iter().any(|a| d.method.supports(a.id.access())) {
                errs.push(format!("defense {} applies to none of the attacks", d.method.name()));
            }
        }
        let s = &self.sweep;
        check_axis(&s.noise_scales, "noise_scales", |b| *b > 0.0 && b.is_finite(), "be positive", &mut errs);
        check_axis(&s.truncation_ratios, "truncation_ratios", |r| *r > 0.0 && *r < 1.0, "lie in (0, 1)", &mut errs);
        check_axis(&s.mix_ratios, "mix_ratios", |_| true, "", &mut errs);
        check_axis(&s.depths, "depths", |d| (2..=8).contains(d), "lie in 2..=8", &mut errs);
        check_axis(&s.group_ratios, "group_ratios", |g| *g > 0.0 && *g < 1.0, "lie in (0, 1)", &mut errs);
        check_axis(&s.seeds, "seeds", |_| true, "", &mut errs);
        if s.mix_ratios.is_some() && !self.attacks.iter().all(|a| a.id.uses_partial() && a.id.uses_shadow()) {
            errs.push("sweep.mix_ratios applies only to A5 and A6 attacks".into());
        }
        if s.group_ratios.is_some() && !matches!(self.graph, GraphSource::Synthetic(_)) {
            errs.push("sweep.group_ratios needs a synthetic graph".into());
        }
        if let Some(depths) = &s.depths {
            for spec in self.attack_specs() {
                if let Some(&l) = spec.layers.iter().max() {
                    if depths.iter().any(|&d| l > d) {
                        errs.push(format!("attack {}: layer {l} exceeds a swept depth", spec.id));
                    }
                }
            }
        }
        if s.truncation_ratios.is_some() && !self.attacks.iter().all(|a| a.id.access() == Access::White) {
            errs.push("sweep.truncation_ratios applies only to white-box attacks".into());
        }
        if !(self.analysis.train_fraction > 0.0 && self.analysis.train_fraction < 1.0) {
            errs.push(format!("analysis.train_fraction {} outside (0, 1)", self.analysis.train_fraction));
        }
        if self.analysis.max_elements == 0 {
            errs.push("analysis.max_elements must be positive".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}
