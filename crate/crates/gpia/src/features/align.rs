//! Making train-side and test-side feature vectors the same length.

use ndarray::Array2;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::pca::{Pca, PcaTarget};
use super::tsne::{tsne, TsneParams};
use super::{to_matrix, FeatureVector};
use crate::error::{precondition, Error, Result};
use crate::nn::{Act, Loss, Mlp};
use crate::rng::sub_rng;

fn default_iterations() -> usize {
    1000
}
fn default_learning_rate() -> f64 {
    200.0
}
fn default_variance() -> f64 {
    0.95
}
fn default_ae_epochs() -> usize {
    500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum AlignmentMethod {
    /// Keep a random subset of positions of the longer side.
    Sampling,
    /// Joint two-dimensional t-SNE of train and test rows.
    Tsne {
        #[serde(default)]
        perplexity: Option<f64>,
        #[serde(default = "default_iterations")]
        iterations: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
    },
    /// Fit on train rows, project both sides. `k` overrides `variance`.
    Pca {
        #[serde(default)]
        k: Option<usize>,
        #[serde(default = "default_variance")]
        variance: f64,
    },
    /// Compress each side longer than `target_dim` (default: the shorter
    /// side's length) with its own one-layer autoencoder.
    Autoencoder {
        #[serde(default)]
        target_dim: Option<usize>,
        #[serde(default = "default_ae_epochs")]
        epochs: usize,
    },
}

impl AlignmentMethod {
    pub fn tsne() -> Self {
        AlignmentMethod::Tsne { perplexity: None, iterations: 1000, learning_rate: 200.0 }
    }

    pub fn pca() -> Self {
        AlignmentMethod::Pca { k: None, variance: 0.95 }
    }

    pub fn autoencoder() -> Self {
        AlignmentMethod::Autoencoder { target_dim: None, epochs: 500 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AlignmentMethod::Sampling => "sampling",
            AlignmentMethod::Tsne { .. } => "tsne",
            AlignmentMethod::Pca { .. } => "pca",
            AlignmentMethod::Autoencoder { .. } => "autoencoder",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AlignmentMethod::Tsne { perplexity, iterations, learning_rate } => {
                precondition(perplexity.is_none_or(|p| p > 0.0), || "perplexity must be positive".into())?;
                precondition(iterations >= 1 && learning_rate > 0.0, || {
                    "t-SNE iterations and learning rate must be positive".into()
                })
            }
            AlignmentMethod::Pca { k, variance } => {
                precondition(k.is_none_or(|k| k >= 1), || "PCA k must be at least 1".into())?;
                precondition(variance > 0.0 && variance <= 1.0, || {
                    format!("retained variance {variance} outside (0, 1]")
                })
            }
            AlignmentMethod::Autoencoder { target_dim, epochs } => {
                precondition(target_dim.is_none_or(|t| t >= 1), || "target_dim must be at least 1".into())?;
                precondition(epochs >= 1, || "autoencoder epochs must be positive".into())
            }
            AlignmentMethod::Sampling => Ok(()),
        }
    }
}

fn common_len(vs: &[FeatureVector], side: &str) -> Result<usize> {
    let Some(first) = vs.first() else {
        return Err(Error::Precondition(format!("{side} side has no feature vectors")));
    };
    if let Some(bad) = vs.iter().find(|v| v.len() != first.len()) {
        return Err(Error::Shape(format!(
            "{side} vectors have lengths {} and {}",
            first.len(),
            bad.len()
        )));
    }
    Ok(first.len())
}

fn replace_values(vs: &[FeatureVector], x: &Array2<f64>) -> Vec<FeatureVector> {
    vs.iter()
        .zip(x.rows())
        .map(|(v, row)| FeatureVector { values: row.to_vec(), source: v.source.clone() })
        .collect()
}

/// Keeps one seeded, sorted subset of nodes on every vector, or of single
/// positions when `keep` does not split into whole nodes.
fn subsample(vs: &[FeatureVector], keep: usize, seed: u64, tag: &str) -> Vec<FeatureVector> {
    let len = vs[0].len();
    let w = vs[0].source.node_width.max(1);
    let w = if len.is_multiple_of(w) && keep.is_multiple_of(w) { w } else { 1 };
    let mut nodes = index::sample(&mut sub_rng(seed, tag, 0), len / w, keep / w).into_vec();
    nodes.sort_unstable();
    let idx: Vec<usize> = nodes.iter().flat_map(|&n| n * w..(n + 1) * w).collect();
    vs.iter()
        .map(|v| FeatureVector {
            values: idx.iter().map(|&i| v.values[i]).collect(),
            source: v.source.clone(),
        })
        .collect()
}

fn equalize_by_sampling(
    train: &[FeatureVector],
    test: &[FeatureVector],
    seed: u64,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>)> {
    let (a, b) = (common_len(train, "train")?, common_len(test, "test")?);
    Ok(match a.cmp(&b) {
        std::cmp::Ordering::Equal => (train.to_vec(), test.to_vec()),
        std::cmp::Ordering::Greater => (subsample(train, b, seed, "align-train"), test.to_vec()),
        std::cmp::Ordering::Less => (train.to_vec(), subsample(test, a, seed, "align-test")),
    })
}

fn compress(vs: &[FeatureVector], dim: usize, epochs: usize, seed: u64, tag: &str) -> Result<Vec<FeatureVector>> {
    let x = to_matrix(vs)?;
    let d = x.ncols();
    let mut net = Mlp::new(&[d, dim, d], &[Act::Relu, Act::Identity], &mut sub_rng(seed, tag, 0));
    net.fit(&x, &x, Loss::Mse, epochs, 0.01);
    let code = net.partial(&x, 1);
    if code.iter().any(|v| !v.is_finite()) {
        return Err(Error::AlignmentInfeasible("autoencoder diverged".into()));
    }
    Ok(replace_values(vs, &code))
}

/// Brings train and test vectors to one common length. Vectors keep their
/// order and sources, so labels stay associated by position.
pub fn align(
    train: &[FeatureVector],
    test: &[FeatureVector],
    m: &AlignmentMethod,
    seed: u64,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>)> {
    m.validate()?;
    let (a, b) = (common_len(train, "train")?, common_len(test, "test")?);
    match *m {
        AlignmentMethod::Sampling => equalize_by_sampling(train, test, seed),
        AlignmentMethod::Tsne { perplexity, iterations, learning_rate } => {
            let (tr, te) = equalize_by_sampling(train, test, seed)?;
            let joint: Vec<FeatureVector> = tr.iter().chain(&te).cloned().collect();
            let x = to_matrix(&joint)?;
            let params = TsneParams { perplexity, iterations, learning_rate };
            let y = tsne(&x, &params, seed)?;
            let (ytr, yte) = y.view().split_at(ndarray::Axis(0), tr.len());
            Ok((replace_values(&tr, &ytr.to_owned()), replace_values(&te, &yte.to_owned())))
        }
        AlignmentMethod::Pca { k, variance } => {
            let (tr, te) = equalize_by_sampling(train, test, seed)?;
            let xtr = to_matrix(&tr)?;
            let target = k.map_or(PcaTarget::Variance(variance), PcaTarget::Components);
            let pca = Pca::fit(&xtr, target)?;
            let xte = to_matrix(&te)?;
            Ok((replace_values(&tr, &pca.transform(&xtr)), replace_values(&te, &pca.transform(&xte))))
        }
        AlignmentMethod::Autoencoder { target_dim, epochs } => {
            let dim = target_dim.unwrap_or(a.min(b));
            if a < dim || b < dim {
                return Err(Error::AlignmentInfeasible(format!(
                    "cannot expand vectors of length {} to {dim}",
                    a.min(b)
                )));
            }
            let tr = if a > dim { compress(train, dim, epochs, seed, "align-ae-train")? } else { train.to_vec() };
            let te = if b > dim { compress(test, dim, epochs, seed, "align-ae-test")? } else { test.to_vec() };
            Ok((tr, te))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::AggregationMethod;
    use rand::{Rng, SeedableRng};

    fn vectors(count: usize, len: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let values = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
                FeatureVector {
                    values,
                    source: crate::features::FeatureSource {
                        method: AggregationMethod::EmbedMaxpool,
                        layers: vec![1],
                        sample_id: i as u64,
                        node_width: 1,
                    },
                }
            })
            .collect()
    }

    #[test]
    fn sampling_keeps_whole_nodes() {
        let with_width = |vs: Vec<FeatureVector>| -> Vec<FeatureVector> {
            vs.into_iter()
                .map(|mut v| {
                    v.values = (0..v.len()).map(|i| i as f64).collect();
                    v.source.node_width = 2;
                    v
                })
                .collect()
        };
        let (tr, te) = (with_width(vectors(2, 20, 1)), with_width(vectors(2, 8, 2)));
        let (a, _) = align(&tr, &te, &AlignmentMethod::Sampling, 3).unwrap();
        for pair in a[0].values.chunks(2) {
            assert_eq!(pair[0] % 2.0, 0.0);
            assert_eq!(pair[1], pair[0] + 1.0);
        }
    }

    #[test]
    fn equal_lengths_pass_through_sampling() {
        let (tr, te) = (vectors(3, 8, 1), vectors(2, 8, 2));
        let (a, b) = align(&tr, &te, &AlignmentMethod::Sampling, 0).unwrap();
        assert_eq!((a, b), (tr, te));
    }

    #[test]
    fn sampling_shortens_only_the_longer_side() {
        let (tr, te) = (vectors(4, 128, 1), vectors(3, 64, 2));
        let (a, b) = align(&tr, &te, &AlignmentMethod::Sampling, 9).unwrap();
        assert!(a.iter().all(|v| v.len() == 64));
        assert_eq!(b, te);
        // One index subset for every vector on the shortened side.
        let pos: Vec<usize> = a[0].values.iter().map(|v| tr[0].values.iter().position(|w| w == v).unwrap()).collect();
        for (x, y) in a.iter().zip(&tr) {
            assert_eq!(x.values, pos.iter().map(|&i| y.values[i]).collect::<Vec<_>>());
        }
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pca_and_tsne_produce_common_length() {
        let (tr, te) = (vectors(12, 20, 1), vectors(6, 16, 2));
        let (a, b) = align(&tr, &te, &AlignmentMethod::Pca { k: Some(3), variance: 0.95 }, 0).unwrap();
        assert!(a.iter().chain(&b).all(|v| v.len() == 3));
        let m = AlignmentMethod::Tsne { perplexity: None, iterations: 50, learning_rate: 200.0 };
        let (a, b) = align(&tr, &te, &m, 0).unwrap();
        assert!(a.iter().chain(&b).all(|v| v.len() == 2));
        assert_eq!(a.len(), 12);
        assert_eq!(b.iter().map(|v| v.source.sample_id).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn autoencoder_compresses_the_longer_side() {
        let (tr, te) = (vectors(6, 12, 1), vectors(4, 5, 2));
        let (a, b) = align(&tr, &te, &AlignmentMethod::Autoencoder { target_dim: None, epochs: 30 }, 0).unwrap();
        assert!(a.iter().all(|v| v.len() == 5));
        assert_eq!(b, te);
        let bad = AlignmentMethod::Autoencoder { target_dim: Some(8), epochs: 30 };
        assert!(matches!(align(&tr, &te, &bad, 0), Err(Error::AlignmentInfeasible(_))));
    }

    #[test]
    fn method_json() {
        let m: AlignmentMethod = serde_json::from_str(r#"{"method":"pca","variance":0.9}"#).unwrap();
        assert_eq!(m, AlignmentMethod::Pca { k: None, variance: 0.9 });
        assert!(serde_json::from_str::<AlignmentMethod>(r#"{"method":"pca","bogus":1}"#).is_err());
        assert!(AlignmentMethod::Pca { k: None, variance: 1.5 }.validate().is_err());
    }
}
