//! GCN, GraphSAGE and GAT node classifiers with hand-written backward
//! passes.
//!
//! A model with `hidden_layers = L` has `L` hidden layers producing the
//! embeddings `Z^1..Z^L` and one output layer producing class logits. No
//! layer has a bias term.

mod pass;
mod serial;
mod train;

use ndarray::{Array1, Array2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::graph::Graph;
use crate::rng::sub_rng;

pub use pass::{forward, forward_inputs};
pub use serial::FORMAT_VERSION;
pub(crate) use train::argmax;
pub use train::{gradient_vector, masked_loss, train, train_with_hook, GradientHook};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arch {
    #[serde(rename = "gcn", alias = "GCN")]
    Gcn,
    #[serde(rename = "sage", alias = "GraphSAGE", alias = "graphsage")]
    Sage,
    #[serde(rename = "gat", alias = "GAT")]
    Gat,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Gcn => "gcn",
            Arch::Sage => "sage",
            Arch::Gat => "gat",
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Arch::Gcn),
            "sage" | "graphsage" => Ok(Arch::Sage),
            "gat" => Ok(Arch::Gat),
            _ => Err(Error::Config(format!("unknown architecture '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GnnConfig {
    pub arch: Arch,
    pub hidden_layers: usize,
    pub hidden_dim: usize,
    pub classes: usize,
    pub sage_neighbors: usize,
    pub gat_heads: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Feed the model every feature column except the property column.
    pub drop_property: bool,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig {
            arch: Arch::Gcn,
            hidden_layers: 2,
            hidden_dim: 64,
            classes: 2,
            sage_neighbors: 10,
            gat_heads: 4,
            lr: 0.01,
            max_epochs: 1500,
            patience: 50,
            seed: 0,
            drop_property: true,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(1..=8).contains(&self.hidden_layers) {
            errs.push(format!("hidden_layers {} outside [1, 8]", self.hidden_layers));
        }
        if self.hidden_dim == 0 {
            errs.push("hidden_dim must be positive".into());
        }
        if self.classes < 2 {
            errs.push("classes must be at least 2".into());
        }
        if self.max_epochs == 0 {
            errs.push("max_epochs must be at least 1".into());
        }
        if self.patience == 0 {
            errs.push("patience must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            errs.push(format!("lr {} must be positive", self.lr));
        }
        if self.arch == Arch::Sage && self.sage_neighbors == 0 {
            errs.push("sage_neighbors must be positive".into());
        }
        if self.arch == Arch::Gat {
            if self.gat_heads == 0 {
                errs.push("gat_heads must be positive".into());
            } else if !self.hidden_dim.is_multiple_of(self.gat_heads) {
                errs.push(format!(
                    "hidden_dim {} not divisible by gat_heads {}",
                    self.hidden_dim, self.gat_heads
                ));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }

    fn heads(&self) -> usize {
        if self.arch == Arch::Gat {
            self.gat_heads
        } else {
            1
        }
    }

    /// (input width, output width) of each head's weight matrix, per layer.
    fn head_shapes(&self, input_dim: usize) -> Vec<(usize, usize)> {
        let heads = self.heads();
        let mut shapes = Vec::with_capacity(self.hidden_layers + 1);
        let mut din = input_dim;
        for l in 0..=self.hidden_layers {
            let out = if l == self.hidden_layers {
                self.classes
            } else {
                self.hidden_dim / heads
            };
            let rows = if self.arch == Arch::Sage { 2 * din } else { din };
            shapes.push((rows, out));
            din = self.hidden_dim;
        }
        shapes
    }
}

/// One attention head (or the single linear map of a GCN/SAGE layer).
#[derive(Clone, Debug, PartialEq)]
pub struct Head {
    pub w: Array2<f64>,
    /// GAT only: attention weights applied to the neighbour and to the
    /// centre node.
    pub a_src: Option<Array1<f64>>,
    pub a_dst: Option<Array1<f64>>,
}

impl Head {
    fn num_params(&self) -> usize {
        self.w.len()
            + self.a_src.as_ref().map_or(0, |a| a.len())
            + self.a_dst.as_ref().map_or(0, |a| a.len())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub heads: Vec<Head>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnnModel {
    config: GnnConfig,
    input_dim: usize,
    layers: Vec<Layer>,
    epochs_trained: usize,
}

fn glorot(rows: usize, cols: usize, rng: &mut crate::rng::Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

impl GnnModel {
    /// Glorot-uniform initialisation seeded by `cfg.seed`.
    pub fn init(cfg: &GnnConfig, input_dim: usize) -> Result<Self> {
        cfg.validate()?;
        precondition(input_dim > 0, || "input dimension must be positive".into())?;
        let mut rng = sub_rng(cfg.seed, "gnn-init", 0);
        let heads = cfg.heads();
        let layers = cfg
            .head_shapes(input_dim)
            .into_iter()
            .map(|(rows, cols)| Layer {
                heads: (0..heads)
                    .map(|_| {
                        let w = glorot(rows, cols, &mut rng);
                        let (a_src, a_dst) = if cfg.arch == Arch::Gat {
                            let a = glorot(2 * cols, 1, &mut rng).into_shape_with_order(2 * cols).unwrap();
                            (Some(a.slice(ndarray::s![..cols]).to_owned()), Some(a.slice(ndarray::s![cols..]).to_owned()))
                        } else {
                            (None, None)
                        };
                        Head { w, a_src, a_dst }
                    })
                    .collect(),
            })
            .collect();
        Ok(GnnModel {
            config: cfg.clone(),
            input_dim,
            layers,
            epochs_trained: 0,
        })
    }

    /// Builds a model from explicit parameters, checking every shape.
    pub fn from_layers(cfg: &GnnConfig, input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        cfg.validate()?;
        let shapes = cfg.head_shapes(input_dim);
        if layers.len() != shapes.len() {
            return Err(Error::Shape(format!("expected {} layers, got {}", shapes.len(), layers.len())));
        }
        for (l, (layer, &(rows, cols))) in layers.iter().zip(&shapes).enumerate() {
            if layer.heads.len() != cfg.heads() {
                return Err(Error::Shape(format!("layer {l}: expected {} heads", cfg.heads())));
            }
            for h in &layer.heads {
                if h.w.dim() != (rows, cols) {
                    return Err(Error::Shape(format!(
                        "layer {l}: weight is {:?}, expected ({rows}, {cols})",
                        h.w.dim()
                    )));
                }
                let want_att = cfg.arch == Arch::Gat;
                let ok = |a: &Option<Array1<f64>>| match a {
                    Some(a) => want_att && a.len() == cols,
                    None => !want_att,
                };
                if !ok(&h.a_src) || !ok(&h.a_dst) {
                    return Err(Error::Shape(format!("layer {l}: attention vectors malformed")));
                }
            }
        }
        Ok(GnnModel {
            config: cfg.clone(),
            input_dim,
            layers,
            epochs_trained: 0,
        })
    }

    pub fn config(&self) -> &GnnConfig {
        &self.config
    }

    pub fn arch(&self) -> Arch {
        self.config.arch
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of hidden layers (embedding matrices).
    pub fn depth(&self) -> usize {
        self.config.hidden_layers
    }

    pub fn epochs_trained(&self) -> usize {
        self.epochs_trained
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| &l.heads)
            .map(Head::num_params)
            .sum()
    }

    /// All parameters flattened. Order: layer by layer; within a layer
    /// head by head; within a head `W` row-major, then `a_src`, then
    /// `a_dst`.
    pub fn parameters(&self) -> Vec<f64> {
        pass::flatten(&self.layers)
    }

    /// Overwrites all parameters from a vector in [`GnnModel::parameters`] order.
    pub fn set_parameters(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                theta.len()
            )));
        }
        let mut k = 0;
        for h in self.layers.iter_mut().flat_map(|l| &mut l.heads) {
            for v in h.w.iter_mut() {
                *v = theta[k];
                k += 1;
            }
            for a in [&mut h.a_src, &mut h.a_dst].into_iter().flatten() {
                for v in a.iter_mut() {
                    *v = theta[k];
                    k += 1;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn inputs(&self, g: &Graph) -> Result<Array2<f64>> {
        let x = g.model_inputs(self.config.drop_property);
        if x.ncols() != self.input_dim {
            return Err(Error::Config(format!(
                "graph provides {} input features, model expects {}",
                x.ncols(),
                self.input_dim
            )));
        }
        Ok(x)
    }
}

/// Per-layer embeddings and the posterior matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    /// `Z^1..Z^L`, each `n × hidden_dim`.
    pub z: Vec<Array2<f64>>,
    /// `n × classes`, rows sum to one.
    pub o: Array2<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
    pub train_acc: Vec<f64>,
    pub test_acc: Vec<f64>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainReport {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }
}

/// Dense `D^{-1/2} (A + I) D^{-1/2}`.
pub fn normalize_adjacency(g: &Graph) -> Array2<f64> {
    let n = g.n();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt()).collect();
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        a[[i, i]] = inv_sqrt[i] * inv_sqrt[i];
    }
    for &(u, v) in g.edges() {
        let w = inv_sqrt[u] * inv_sqrt[v];
        a[[u, v]] = w;
        a[[v, u]] = w;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::with_groups;

    #[test]
    fn normalized_adjacency_examples() {
        let pair = with_groups(&[0, 1], &[(0, 1)]);
        assert!(normalize_adjacency(&pair).iter().all(|&v| (v - 0.5).abs() < 1e-15));

        let lone = with_groups(&[0, 1, 0], &[(0, 1)]);
        assert_eq!(normalize_adjacency(&lone)[[2, 2]], 1.0);

        let tri = with_groups(&[0, 1, 0], &[(0, 1), (1, 2), (0, 2)]);
        assert!(normalize_adjacency(&tri).iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn parameter_round_trip() {
        for arch in [Arch::Gcn, Arch::Sage, Arch::Gat] {
            let cfg = GnnConfig { arch, hidden_dim: 8, gat_heads: 2, ..Default::default() };
            let mut m = GnnModel::init(&cfg, 3).unwrap();
            let theta: Vec<f64> = (0..m.num_params()).map(|i| i as f64).collect();
            m.set_parameters(&theta).unwrap();
            assert_eq!(m.parameters(), theta);
            assert!(m.set_parameters(&theta[1..]).is_err());
        }
    }

    #[test]
    fn layer_shapes() {
        let cfg = GnnConfig { arch: Arch::Sage, hidden_dim: 6, classes: 3, ..Default::default() };
        let m = GnnModel::init(&cfg, 4).unwrap();
        let dims: Vec<_> = m.layers().iter().map(|l| l.heads[0].w.dim()).collect();
        assert_eq!(dims, vec![(8, 6), (12, 6), (12, 3)]);

        let cfg = GnnConfig { arch: Arch::Gat, hidden_dim: 8, gat_heads: 4, classes: 3, hidden_layers: 1, ..Default::default() };
        let m = GnnModel::init(&cfg, 5).unwrap();
        assert_eq!(m.layers()[0].heads.len(), 4);
        assert_eq!(m.layers()[0].heads[0].w.dim(), (5, 2));
        assert_eq!(m.layers()[1].heads[0].w.dim(), (8, 3));
        assert_eq!(m.layers()[1].heads[0].a_src.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn config_validation() {
        assert!(GnnConfig { hidden_layers: 9, ..Default::default() }.validate().is_err());
        assert!(GnnConfig { hidden_dim: 0, ..Default::default() }.validate().is_err());
        assert!(GnnConfig { patience: 0, ..Default::default() }.validate().is_err());
        assert!(GnnConfig { arch: Arch::Gat, hidden_dim: 10, gat_heads: 4, ..Default::default() }
            .validate()
            .is_err());
        assert!(GnnConfig::default().validate().is_ok());
    }
}
