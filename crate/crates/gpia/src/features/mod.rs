//! Fixed-length attack features from GNN outputs, and alignment of
//! feature vectors of different lengths.

mod align;
mod pca;
mod tsne;

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};

pub use align::{align, AlignmentMethod};
pub use pca::{Pca, PcaTarget};
pub use tsne::{tsne, TsneParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationMethod {
    PosteriorConcat,
    PosteriorEwd,
    EmbedConcat,
    EmbedMaxpool,
    EmbedMeanpool,
}

impl AggregationMethod {
    pub fn is_posterior(self) -> bool {
        matches!(self, Self::PosteriorConcat | Self::PosteriorEwd)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PosteriorConcat => "posterior-concat",
            Self::PosteriorEwd => "posterior-ewd",
            Self::EmbedConcat => "embed-concat",
            Self::EmbedMaxpool => "embed-maxpool",
            Self::EmbedMeanpool => "embed-meanpool",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSource {
    pub method: AggregationMethod,
    /// 1-based hidden-layer indices; empty for posterior features.
    pub layers: Vec<usize>,
    pub sample_id: u64,
    /// Consecutive values that belong to one node; 1 for pooled features.
    #[serde(default = "one")]
    pub node_width: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub source: FeatureSource,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_sample(mut self, id: u64) -> Self {
        self.source.sample_id = id;
        self
    }

    pub fn with_layers(mut self, layers: Vec<usize>) -> Self {
        self.source.layers = layers;
        self
    }

    fn new(values: Vec<f64>, method: AggregationMethod, node_width: usize) -> Result<Self> {
        precondition(!values.is_empty(), || "feature vector is empty".into())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("feature vector has non-finite entries".into()));
        }
        Ok(FeatureVector {
            values,
            source: FeatureSource { method, layers: Vec::new(), sample_id: 0, node_width },
        })
    }
}

/// Average element-wise difference `sum_{i != j} |p_i - p_j| / (l (l - 1))`.
pub fn ewd_per_node(p: ArrayView1<f64>) -> Result<f64> {
    let l = p.len();
    precondition(l >= 2, || format!("posterior row needs at least two entries, got {l}"))?;
    let mut sorted: Vec<f64> = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    // sum_{i<j} (s_j - s_i) = sum_k s_k (2k - l + 1) over ascending order.
    let pair_sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, &v)| v * (2.0 * k as f64 - l as f64 + 1.0))
        .sum();
    Ok(2.0 * pair_sum / (l * (l - 1)) as f64)
}

pub fn aggregate_posteriors(o: &Array2<f64>, m: AggregationMethod) -> Result<FeatureVector> {
    if !m.is_posterior() {
        return Err(Error::Usage(format!("{} is not a posterior aggregation", m.name())));
    }
    if o.nrows() == 0 || o.ncols() == 0 {
        return Err(Error::Usage("empty posterior matrix".into()));
    }
    let values = match m {
        AggregationMethod::PosteriorConcat => o.iter().copied().collect(),
        _ => o.rows().into_iter().map(ewd_per_node).collect::<Result<_>>()?,
    };
    let width = if m == AggregationMethod::PosteriorConcat { o.ncols() } else { 1 };
    FeatureVector::new(values, m, width)
}

/// Column-concatenates the given layer embeddings per node, then pools.
pub fn aggregate_embeddings(zs: &[&Array2<f64>], m: AggregationMethod) -> Result<FeatureVector> {
    if m.is_posterior() {
        return Err(Error::Usage(format!("{} is not an embedding aggregation", m.name())));
    }
    let Some(first) = zs.first() else {
        return Err(Error::Usage("no embedding layers selected".into()));
    };
    let n = first.nrows();
    if let Some(bad) = zs.iter().find(|z| z.nrows() != n) {
        return Err(Error::Shape(format!("embedding layers have {} and {} rows", n, bad.nrows())));
    }
    let width: usize = zs.iter().map(|z| z.ncols()).sum();
    if n == 0 || width == 0 {
        return Err(Error::Usage("empty embedding matrix".into()));
    }
    let row = |i: usize| zs.iter().flat_map(move |z| z.row(i).into_iter().copied());
    let values: Vec<f64> = match m {
        AggregationMethod::EmbedConcat => (0..n).flat_map(row).collect(),
        AggregationMethod::EmbedMaxpool => (0..n)
            .map(|i| row(i).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        _ => (0..n).map(|i| row(i).sum::<f64>() / width as f64).collect(),
    };
    let node_width = if m == AggregationMethod::EmbedConcat { width } else { 1 };
    FeatureVector::new(values, m, node_width)
}

/// Stacks equal-length vectors into a matrix, one vector per row.
pub fn to_matrix(vs: &[FeatureVector]) -> Result<Array2<f64>> {
    let d = vs.first().map_or(0, |v| v.len());
    if let Some(bad) = vs.iter().find(|v| v.len() != d) {
        return Err(Error::Shape(format!("feature vectors of lengths {d} and {}", bad.len())));
    }
    let data = vs.iter().flat_map(|v| v.values.iter().copied()).collect();
    Ok(Array2::from_shape_vec((vs.len(), d), data).expect("lengths checked"))
}

/// Writes one vector per row with the label in the last column.
pub fn write_feature_csv(path: impl AsRef<Path>, vs: &[FeatureVector], labels: &[usize]) -> Result<()> {
    if vs.len() != labels.len() {
        return Err(Error::Shape(format!("{} vectors but {} labels", vs.len(), labels.len())));
    }
    let x = to_matrix(vs)?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..x.ncols()).map(|c| format!("f{c}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, label) in x.rows().into_iter().zip(labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(label.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn ewd_examples() {
        assert_eq!(ewd_per_node(array![0.5, 0.5].view()).unwrap(), 0.0);
        assert_eq!(ewd_per_node(array![1.0, 0.0].view()).unwrap(), 1.0);
        let v = ewd_per_node(array![0.6, 0.3, 0.1].view()).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        assert!(ewd_per_node(array![1.0].view()).is_err());
    }

    #[test]
    fn posterior_aggregation_examples() {
        let o = array![[0.7, 0.3], [0.2, 0.8]];
        let c = aggregate_posteriors(&o, AggregationMethod::PosteriorConcat).unwrap();
        assert_eq!(c.values, vec![0.7, 0.3, 0.2, 0.8]);
        let e = aggregate_posteriors(&o, AggregationMethod::PosteriorEwd).unwrap();
        assert!((e.values[0] - 0.4).abs() < 1e-12 && (e.values[1] - 0.6).abs() < 1e-12);
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(matches!(aggregate_posteriors(&empty, AggregationMethod::PosteriorConcat), Err(Error::Usage(_))));
        assert!(matches!(aggregate_posteriors(&o, AggregationMethod::EmbedMaxpool), Err(Error::Usage(_))));
    }

    #[test]
    fn embedding_aggregation_examples() {
        let z = array![[1.0, 5.0], [2.0, 3.0]];
        assert_eq!(aggregate_embeddings(&[&z], AggregationMethod::EmbedMaxpool).unwrap().values, vec![5.0, 3.0]);
        assert_eq!(aggregate_embeddings(&[&z], AggregationMethod::EmbedMeanpool).unwrap().values, vec![3.0, 2.5]);
        let (a, b) = (array![[1.0], [2.0]], array![[3.0], [4.0]]);
        assert_eq!(
            aggregate_embeddings(&[&a, &b], AggregationMethod::EmbedConcat).unwrap().values,
            vec![1.0, 3.0, 2.0, 4.0]
        );
        let c = array![[1.0]];
        assert!(matches!(aggregate_embeddings(&[&a, &c], AggregationMethod::EmbedConcat), Err(Error::Shape(_))));
    }

    #[test]
    fn csv_export_has_label_last() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let vs: Vec<_> = [[1.0, 2.0], [3.0, 4.0]]
            .iter()
            .map(|v| FeatureVector::new(v.to_vec(), AggregationMethod::EmbedConcat, 1).unwrap())
            .collect();
        write_feature_csv(&p, &vs, &[1, 0]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "f0,f1,label\n1,2,1\n3,4,0\n");
    }

    proptest! {
        #[test]
        fn ewd_permutation_invariant_and_scale_covariant(
            p in proptest::collection::vec(0.0f64..1.0, 2..8),
            c in 0.0f64..1.0,
            rot in 0usize..8,
        ) {
            let base = ewd_per_node(ArrayView1::from(&p)).unwrap();
            let mut q = p.clone();
            q.rotate_left(rot % p.len());
            q.reverse();
            prop_assert!((ewd_per_node(ArrayView1::from(&q)).unwrap() - base).abs() < 1e-12);
            let scaled: Vec<f64> = p.iter().map(|v| v * c).collect();
            prop_assert!((ewd_per_node(ArrayView1::from(&scaled)).unwrap() - c * base).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }

        #[test]
        fn maxpool_dominates_meanpool_and_follows_node_order(
            vals in proptest::collection::vec(-5.0f64..5.0, 12),
            shift in 1usize..4,
        ) {
            let z = Array2::from_shape_vec((4, 3), vals).unwrap();
            let mx = aggregate_embeddings(&[&z], AggregationMethod::EmbedMaxpool).unwrap().values;
            let mn = aggregate_embeddings(&[&z], AggregationMethod::EmbedMeanpool).unwrap().values;
            for (a, b) in mx.iter().zip(&mn) {
                prop_assert!(a >= b);
            }
            let perm: Vec<usize> = (0..4).map(|i| (i + shift) % 4).collect();
            let zp = z.select(ndarray::Axis(0), &perm);
            let mxp = aggregate_embeddings(&[&zp], AggregationMethod::EmbedMaxpool).unwrap().values;
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(mxp[k], mx[i]);
            }
        }
    }
}
