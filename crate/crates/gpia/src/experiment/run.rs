//! Running configured experiments and writing their artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GraphSource, NoiseTarget, PartialSource};
use crate::analysis::{
    export_distribution, gap_buckets, group_metrics, property_label_correlation, write_distribution_csv,
    write_gap_buckets_csv, ElementKind, Influence,
};
use crate::attacks::{
    execute, node_masks, Access, AdversaryKnowledge, AttackResult, AttackRun, AttackSpec, MixRatio, NoDefense,
    PartialGraph,
};
use crate::defenses::{evaluate_defense, DefenseMethod, DefenseSpec};
use crate::error::{Error, Result};
use crate::fingerprint::config_hash;
use crate::gnn::{train, Arch, GnnConfig, FORMAT_VERSION};
use crate::graph::{generate_synthetic, load_graph_dir, write_graph, Graph, SyntheticConfig};
use crate::rng::{sub_rng, sub_seed};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_ENV: &str = "GPIA_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisKind {
    Influence,
    Disparity,
    Correlation,
    GapBuckets,
    Distribution,
}

impl AnalysisKind {
    pub fn name(self) -> &'static str {
        match self {
            AnalysisKind::Influence => "influence",
            AnalysisKind::Disparity => "disparity",
            AnalysisKind::Correlation => "correlation",
            AnalysisKind::GapBuckets => "gapbuckets",
            AnalysisKind::Distribution => "distribution",
        }
    }
}

impl FromStr for AnalysisKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "influence" => AnalysisKind::Influence,
            "disparity" => AnalysisKind::Disparity,
            "correlation" => AnalysisKind::Correlation,
            "gapbuckets" => AnalysisKind::GapBuckets,
            "distribution" => AnalysisKind::Distribution,
            _ => return Err(Error::Usage(format!("unknown analysis {s:?}"))),
        })
    }
}

impl fmt::Display for AnalysisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A subcommand that runs from a configuration file.
#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    /// Writes the configured synthetic graphs, to `out` or the output
    /// directory.
    Synth { out: Option<PathBuf> },
    Attack,
    Defend,
    Analyze(AnalysisKind),
    Sweep { jobs: usize },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Attack => "attack",
            Command::Defend => "defend",
            Command::Analyze(_) => "analyze",
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// A stage that failed while the rest of the run went on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    pub stage: String,
    pub message: String,
}

impl StageFailure {
    fn new(point: Option<usize>, e: &Error) -> Self {
        let stage = match e {
            Error::Stage { stage, .. } => stage.to_string(),
            _ => "run".into(),
        };
        StageFailure { point, stage, message: e.root().to_string() }
    }
}

/// What a run did, written as `manifest.json` beside its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub wall_clock_secs: f64,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub failures: Vec<StageFailure>,
    /// Human-readable result table.
    #[serde(skip)]
    pub summary: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, config_hash: String) -> Self {
        let versions = BTreeMap::from([
            ("gpia".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("model_format".to_string(), FORMAT_VERSION.to_string()),
        ]);
        RunManifest {
            command: command.into(),
            config_hash,
            versions,
            seeds: Vec::new(),
            wall_clock_secs: 0.0,
            outputs: Vec::new(),
            failures: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    fn finish(mut self, dir: &Path, start: Instant) -> Result<Self> {
        self.wall_clock_secs = start.elapsed().as_secs_f64();
        self.outputs.push("manifest.json".into());
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(self)
    }
}

/// Graphs for one run.
struct World {
    target: Graph,
    partial: Option<PartialGraph>,
    shadow: Option<Graph>,
}

impl World {
    fn knowledge(&self, spec: &AttackSpec, mix: MixRatio) -> AdversaryKnowledge {
        let partial = if spec.id.uses_partial() { self.partial.clone() } else { None };
        let shadow = if spec.id.uses_shadow() { self.shadow.clone() } else { None };
        AdversaryKnowledge::new(partial, shadow, spec.id.access()).with_mix_ratio(mix)
    }
}

fn load_source(src: &GraphSource, property_col: usize, group_ratio: Option<f64>) -> Result<Graph> {
    match src {
        GraphSource::Synthetic(s) => {
            generate_synthetic(&SyntheticConfig { group_ratio: group_ratio.unwrap_or(s.group_ratio), ..s.clone() })
        }
        GraphSource::Path(p) => load_graph_dir(p, property_col),
    }
}

fn layers_text(layers: &[usize]) -> String {
    layers.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

fn opt_text(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_else(|| "-".into())
}

#[derive(Serialize)]
struct AttackRow<'a> {
    attack_id: &'a str,
    layers: String,
    aggregation: &'a str,
    alignment: &'a str,
    classifier: &'a str,
    accuracy: f64,
    target_accuracy: Option<f64>,
    n_test: usize,
    seed: u64,
    config_hash: &'a str,
}

#[derive(Serialize)]
struct DefendRow<'a> {
    method: &'a str,
    param: Option<f64>,
    attack_id: &'a str,
    attack_acc: f64,
    target_acc: f64,
    seed: u64,
    config_hash: &'a str,
}

/// One row of a sweep's `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: usize,
    pub attack_id: String,
    pub depth: usize,
    pub mix_ratio: String,
    pub group_ratio: Option<f64>,
    pub method: String,
    pub param: Option<f64>,
    pub attack_acc: f64,
    pub target_acc: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum DefensePoint {
    None,
    Noise(f64),
    Truncation(f64),
}

/// One cell of the sweep's cross-product.
#[derive(Clone, Debug)]
struct SweepPoint {
    index: usize,
    seed: u64,
    group_ratio: Option<f64>,
    depth: usize,
    mix: MixRatio,
    defense: DefensePoint,
    attack: usize,
}

/// A validated configuration bound to its output directory.
#[derive(Clone, Debug)]
pub struct Experiment {
    config: ExperimentConfig,
    hash: String,
    out: PathBuf,
}

impl Experiment {
    /// Validates `config`. The hash covers everything except the output
    /// directory.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mut hashed = config.clone();
        hashed.output_dir = PathBuf::new();
        let hash = config_hash(&hashed)?;
        let out = config.output_dir.clone();
        Ok(Experiment { config, hash, out })
    }

    /// Loads and validates a config file, honouring the output directory
    /// override in the environment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut e = Self::new(ExperimentConfig::load(path)?)?;
        if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
            e.out = PathBuf::from(dir);
        }
        Ok(e)
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out = dir.into();
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    pub fn run(&self, cmd: &Command) -> Result<RunManifest> {
        let start = Instant::now();
        let out = match cmd {
            Command::Synth { out: Some(dir) } => dir.clone(),
            _ => self.out.clone(),
        };
        std::fs::create_dir_all(&out)?;
        let mut m = RunManifest::new(cmd.name(), self.hash.clone());
        match cmd {
            Command::Synth { .. } => self.synth(&out, &mut m)?,
            Command::Attack => self.attack(&out, &mut m)?,
            Command::Defend => self.defend(&out, &mut m)?,
            Command::Analyze(kind) => self.analyze(*kind, &out, &mut m)?,
            Command::Sweep { jobs } => self.sweep(*jobs, &out, &mut m)?,
        }
        m.finish(&out, start)
    }

    fn gnn(&self, seed: u64, depth: Option<usize>) -> GnnConfig {
        GnnConfig { seed, hidden_layers: depth.unwrap_or(self.config.gnn.hidden_layers), ..self.config.gnn.clone() }
    }

    fn world(&self, group_ratio: Option<f64>, seed: u64) -> Result<World> {
        let c = &self.config;
        let col = c.property.property_col;
        let target = load_source(&c.graph, col, group_ratio).map_err(|e| e.in_stage("graph"))?;
        let partial = match &c.partial {
            None => None,
            Some(PartialSource::Fraction(f)) => Some(PartialGraph::from_target(&target, *f, seed)?),
            Some(PartialSource::Path(p)) => Some(PartialGraph::detached(load_graph_dir(p, col)?)),
        };
        let shadow = match &c.shadow_graph {
            None => None,
            Some(s) => Some(load_source(s, col, group_ratio).map_err(|e| e.in_stage("shadow-graph"))?),
        };
        Ok(World { target, partial, shadow })
    }

    fn require_attacks(&self, what: &str) -> Result<Vec<AttackSpec>> {
        let specs = self.config.attack_specs();
        if specs.is_empty() {
            return Err(Error::Usage(format!("{what} needs at least one attack in the config")));
        }
        Ok(specs)
    }

    fn synth(&self, out: &Path, m: &mut RunManifest) -> Result<()> {
        let c = &self.config;
        let GraphSource::Synthetic(s) = &c.graph else {
            return Err(Error::Usage("synth needs a synthetic graph source".into()));
        };
        let g = generate_synthetic(s)?;
        write_graph(&g, out)?;
        m.outputs.extend(["edges.tsv".to_string(), "features.csv".to_string()]);
        m.seeds.push(s.seed);
        m.summary.push(format!("target  n={} edges={} features={}", g.n(), g.num_edges(), g.feature_dim()));
        if let Some(GraphSource::Synthetic(s)) = &c.shadow_graph {
            let g = generate_synthetic(s)?;
            write_graph(&g, out.join("shadow"))?;
            m.outputs.extend(["shadow/edges.tsv".to_string(), "shadow/features.csv".to_string()]);
            m.seeds.push(s.seed);
            m.summary.push(format!("shadow  n={} edges={} features={}", g.n(), g.num_edges(), g.feature_dim()));
        }
        Ok(())
    }

    fn attack(&self, out: &Path, m: &mut RunManifest) -> Result<()> {
        let specs = self.require_attacks("attack")?;
        let seed = self.config.seed;
        m.seeds.push(seed);
        let world = self.world(None, seed)?;
        let cfg = self.gnn(seed, None);
        let mut w = csv::Writer::from_path(out.join("results.csv"))?;
        m.outputs.push("results.csv".into());
        m.summary.push(format!("{:<6} {:<18} {:<14} {:>8} {:>8}", "attack", "aggregation", "classifier", "AC", "target"));
        for spec in &specs {
            let k = world.knowledge(spec, self.config.mix_ratio);
            let r = match execute(spec, &k, &world.target, &cfg, seed, &NoDefense) {
                Ok(run) => run.result,
                Err(e) => {
                    m.failures.push(StageFailure::new(None, &e));
                    continue;
                }
            };
            let r = AttackResult { config_hash: self.hash.clone(), ..r };
            w.serialize(AttackRow {
                attack_id: &r.attack_id,
                layers: layers_text(&r.layers),
                aggregation: &r.aggregation,
                alignment: &r.alignment,
                classifier: &r.classifier,
                accuracy: r.accuracy,
                target_accuracy: r.target_accuracy,
                n_test: r.n_test,
                seed,
                config_hash: &self.hash,
            })?;
            let json = format!("attack-{}.json", r.attack_id);
            let preds = format!("predictions-{}.csv", r.attack_id);
            r.write_json(out.join(&json))?;
            r.write_predictions_csv(out.join(&preds))?;
            m.outputs.extend([json, preds]);
            m.summary.push(format!(
                "{:<6} {:<18} {:<14} {:>8.3} {:>8}",
                r.attack_id,
                r.aggregation,
                r.classifier,
                r.accuracy,
                opt_text(r.target_accuracy.map(|t| (t * 1000.0).round() / 1000.0))
            ));
        }
        w.flush()?;
        Ok(())
    }

    fn defend(&self, out: &Path, m: &mut RunManifest) -> Result<()> {
        let specs = self.require_attacks("defend")?;
        if self.config.defenses.is_empty() {
            return Err(Error::Usage("defend needs at least one defense in the config".into()));
        }
        let seed = self.config.seed;
        m.seeds.push(seed);
        let world = self.world(None, seed)?;
        let cfg = self.gnn(seed, None);
        let mut w = csv::Writer::from_path(out.join("results.csv"))?;
        m.outputs.push("results.csv".into());
        m.summary.push(format!("{:<18} {:>8} {:<6} {:>8} {:>8}", "defense", "param", "attack", "AC", "target"));
        for d in &self.config.defenses {
            for spec in specs.iter().filter(|s| d.method.supports(s.id.access())) {
                let k = world.knowledge(spec, self.config.mix_ratio);
                match evaluate_defense(d, spec, &k, &world.target, &cfg, seed) {
                    Ok(r) => {
                        w.serialize(DefendRow {
                            method: &r.method,
                            param: r.param,
                            attack_id: &r.attack_id,
                            attack_acc: r.attack_acc,
                            target_acc: r.target_acc,
                            seed,
                            config_hash: &self.hash,
                        })?;
                        m.summary.push(format!(
                            "{:<18} {:>8} {:<6} {:>8.3} {:>8.3}",
                            r.method,
                            opt_text(r.param),
                            r.attack_id,
                            r.attack_acc,
                            r.target_acc
                        ));
                    }
                    Err(e) => m.failures.push(StageFailure::new(None, &e)),
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// The first configured attack, run without defenses.
    fn first_attack(&self, world: &World, cfg: &GnnConfig, seed: u64) -> Result<AttackRun> {
        let spec = self.require_attacks("this analysis")?.remove(0);
        let k = world.knowledge(&spec, self.config.mix_ratio);
        execute(&spec, &k, &world.target, cfg, seed, &NoDefense)
    }

    fn analyze(&self, kind: AnalysisKind, out: &Path, m: &mut RunManifest) -> Result<()> {
        let c = &self.config;
        let seed = c.seed;
        m.seeds.push(seed);
        let world = self.world(None, seed)?;
        let g = &world.target;
        let cfg = self.gnn(seed, None);
        let (tr, te) = node_masks(g.n(), c.analysis.train_fraction, sub_seed(seed, "analysis", 0));
        let file = format!("{}.csv", kind.name());
        match kind {
            AnalysisKind::Influence => {
                let inf = Influence::new(g, &cfg, &tr, &te).map_err(|e| e.in_stage("train"))?;
                let report = match c.analysis.element {
                    ElementKind::Node => {
                        let nodes = pick(g.n(), c.analysis.max_elements, seed);
                        inf.nodes(&nodes)?
                    }
                    ElementKind::Edge => {
                        let edges: Vec<_> =
                            pick(g.num_edges(), c.analysis.max_elements, seed).iter().map(|&i| g.edges()[i]).collect();
                        inf.edges(&edges)?
                    }
                };
                report.write_csv(out.join(&file))?;
                for gm in &report.group_means {
                    m.summary.push(format!("group {:<8} count {:>5} mean influence {:.6}", gm.group, gm.count, gm.mean));
                }
            }
            AnalysisKind::Disparity => {
                let (model, _) = train(g, &cfg, &tr, &te).map_err(|e| e.in_stage("train"))?;
                let report = group_metrics(&model, g, &c.property, &te)?;
                report.write_csv(out.join(&file))?;
                for s in [&report.lhs, &report.rhs] {
                    m.summary.push(format!(
                        "group {:<8} count {:>5} loss {:.4} accuracy {:.4}",
                        s.group, s.count, s.loss, s.accuracy
                    ));
                }
                m.summary.push(format!("loss gap {:.4}", report.loss_gap));
            }
            AnalysisKind::Correlation => {
                let r = property_label_correlation(g)?;
                let mut w = csv::Writer::from_path(out.join(&file))?;
                w.write_record(["property_col", "label_correlation"])?;
                w.write_record([c.property.property_col.to_string(), r.to_string()])?;
                w.flush()?;
                m.summary.push(format!("property/label correlation {r:.4}"));
            }
            AnalysisKind::GapBuckets => {
                let run = self.first_attack(&world, &cfg, seed)?;
                let samples: Vec<(f64, bool)> = run
                    .target
                    .iter()
                    .zip(&run.result.predictions)
                    .map(|(o, p)| (o.loss_gap(), p.truth == p.predicted))
                    .collect();
                let buckets = gap_buckets(&samples)?;
                write_gap_buckets_csv(out.join(&file), &buckets)?;
                for b in &buckets {
                    m.summary.push(format!(
                        "{:<10} count {:>4} mean gap {:>8.4} AC {:.3}",
                        b.bucket, b.count, b.mean_gap, b.accuracy
                    ));
                }
            }
            AnalysisKind::Distribution => {
                let run = self.first_attack(&world, &cfg, seed)?;
                let points = export_distribution(&run.dataset.test, &run.dataset.test_labels, seed)?;
                write_distribution_csv(out.join(&file), &points)?;
                m.summary.push(format!("{} points", points.len()));
            }
        }
        m.outputs.push(file);
        Ok(())
    }

    fn sweep_points(&self) -> Vec<SweepPoint> {
        let c = &self.config;
        let s = &c.sweep;
        let seeds = s.seeds.clone().unwrap_or_else(|| vec![c.seed]);
        let ratios: Vec<Option<f64>> = match &s.group_ratios {
            Some(v) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let depths = s.depths.clone().unwrap_or_else(|| vec![c.gnn.hidden_layers]);
        let mixes = s.mix_ratios.clone().unwrap_or_else(|| vec![c.mix_ratio]);
        let mut defenses: Vec<DefensePoint> = Vec::new();
        if let Some(b) = &s.noise_scales {
            defenses.extend(b.iter().map(|&b| DefensePoint::Noise(b)));
        }
        if let Some(r) = &s.truncation_ratios {
            defenses.extend(r.iter().map(|&r| DefensePoint::Truncation(r)));
        }
        if defenses.is_empty() {
            defenses.push(DefensePoint::None);
        }
        let mut points = Vec::new();
        for &seed in &seeds {
            for &group_ratio in &ratios {
                for &depth in &depths {
                    for &mix in &mixes {
                        for &defense in &defenses {
                            for attack in 0..c.attacks.len() {
                                let index = points.len();
                                points.push(SweepPoint { index, seed, group_ratio, depth, mix, defense, attack });
                            }
                        }
                    }
                }
            }
        }
        points
    }

    fn defense_for(&self, d: DefensePoint, access: Access, seed: u64) -> Option<DefenseSpec> {
        let method = match d {
            DefensePoint::None => return None,
            DefensePoint::Noise(b) => match (self.config.sweep.noise_target, access) {
                (NoiseTarget::Gradient, _) => DefenseMethod::dp_from_scale(b),
                (NoiseTarget::Output, Access::Black) => DefenseMethod::NoisyPosterior { b },
                (NoiseTarget::Output, Access::White) => DefenseMethod::NoisyEmbedding { b, target_layers: None },
            },
            DefensePoint::Truncation(r) => DefenseMethod::Truncation { r },
        };
        Some(DefenseSpec { seed, ..DefenseSpec::new(method) })
    }

    fn run_point(&self, p: &SweepPoint, specs: &[AttackSpec]) -> Result<SweepRow> {
        let spec = &specs[p.attack];
        let world = self.world(p.group_ratio, p.seed)?;
        let cfg = self.gnn(p.seed, Some(p.depth));
        let k = world.knowledge(spec, p.mix);
        let (method, param, attack_acc, target_acc) = match self.defense_for(p.defense, spec.id.access(), p.seed) {
            None => {
                let r = execute(spec, &k, &world.target, &cfg, p.seed, &NoDefense)?.result;
                ("none".to_string(), None, r.accuracy, r.target_accuracy)
            }
            Some(d) => {
                let r = evaluate_defense(&d, spec, &k, &world.target, &cfg, p.seed)?;
                (r.method, r.param, r.attack_acc, Some(r.target_acc))
            }
        };
        Ok(SweepRow {
            point: p.index,
            attack_id: spec.id.to_string(),
            depth: p.depth,
            mix_ratio: p.mix.to_string(),
            group_ratio: p.group_ratio,
            method,
            param,
            attack_acc,
            target_acc,
            seed: p.seed,
            config_hash: self.hash.clone(),
        })
    }

    /// Runs every point of the cross-product on `jobs` workers. Rows are
    /// written in point order, so the file does not depend on `jobs`.
    pub fn sweep_rows(&self, jobs: usize) -> Result<Vec<Result<SweepRow>>> {
        if jobs == 0 {
            return Err(Error::Usage("--jobs must be at least 1".into()));
        }
        let specs = self.require_attacks("sweep")?;
        let points = self.sweep_points();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(pool.install(|| points.par_iter().map(|p| self.run_point(p, &specs)).collect()))
    }

    fn sweep(&self, jobs: usize, out: &Path, m: &mut RunManifest) -> Result<()> {
        let rows = self.sweep_rows(jobs)?;
        m.seeds = self.config.sweep.seeds.clone().unwrap_or_else(|| vec![self.config.seed]);
        let mut w = csv::Writer::from_path(out.join("results.csv"))?;
        m.outputs.push("results.csv".into());
        m.summary.push(format!(
            "{:>5} {:<6} {:>5} {:<6} {:>6} {:<18} {:>6} {:>8} {:>8} {:>5}",
            "point", "attack", "depth", "mix", "ratio", "method", "param", "AC", "target", "seed"
        ));
        for (i, row) in rows.into_iter().enumerate() {
            match row {
                Ok(r) => {
                    w.serialize(&r)?;
                    m.summary.push(format!(
                        "{:>5} {:<6} {:>5} {:<6} {:>6} {:<18} {:>6} {:>8.3} {:>8} {:>5}",
                        r.point,
                        r.attack_id,
                        r.depth,
                        r.mix_ratio,
                        opt_text(r.group_ratio),
                        r.method,
                        opt_text(r.param),
                        r.attack_acc,
                        opt_text(r.target_acc.map(|t| (t * 1000.0).round() / 1000.0)),
                        r.seed
                    ));
                }
                Err(e) => m.failures.push(StageFailure::new(Some(i), &e)),
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Up to `max` sorted indices out of `0..n`, drawn at random when `n`
/// exceeds `max`.
fn pick(n: usize, max: usize, seed: u64) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let mut v = index::sample(&mut sub_rng(seed, "analysis-elements", 0), n, max).into_vec();
    v.sort_unstable();
    v
}

/// Settings of the `train` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainArgs {
    pub graph: PathBuf,
    pub arch: Arch,
    pub layers: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub property_col: usize,
    pub train_fraction: f64,
}

/// Trains a GNN on a graph directory and saves it to `args.out`, with the
/// manifest beside it.
pub fn train_model(args: &TrainArgs) -> Result<RunManifest> {
    let start = Instant::now();
    let cfg = GnnConfig { arch: args.arch, hidden_layers: args.layers, seed: args.seed, ..Default::default() };
    cfg.validate().map_err(|e| Error::Validation(vec![format!("gnn: {e}")]))?;
    let mut hashed = args.clone();
    hashed.out = PathBuf::new();
    let mut m = RunManifest::new("train", config_hash(&hashed)?);
    m.seeds.push(args.seed);
    let g = load_graph_dir(&args.graph, args.property_col).map_err(|e| e.in_stage("graph"))?;
    let (tr, te) = node_masks(g.n(), args.train_fraction, sub_seed(args.seed, "train-split", 0));
    let (model, report) = train(&g, &cfg, &tr, &te).map_err(|e| e.in_stage("train"))?;
    let dir = match args.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    model.save(&args.out)?;
    m.outputs.push(args.out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default());
    let best = report.best_epoch;
    m.summary.push(format!(
        "{} layers={} epochs={} best_epoch={} train_acc={:.4} test_acc={:.4}",
        args.arch.name(),
        args.layers,
        report.epochs(),
        best,
        report.train_acc.get(best).copied().unwrap_or(f64::NAN),
        report.test_acc.get(best).copied().unwrap_or(f64::NAN)
    ));
    m.finish(&dir, start)
}
