//! Principal component analysis via a symmetric eigendecomposition of
//! either the covariance matrix or, when there are fewer rows than
//! columns, the Gram matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaTarget {
    /// Keep exactly this many components (capped by the data rank bound).
    Components(usize),
    /// Keep the fewest components whose explained variance reaches this
    /// fraction.
    Variance(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pca {
    mean: Array1<f64>,
    /// `k × d`, rows are unit-norm principal directions.
    components: Array2<f64>,
    explained: Vec<f64>,
}

impl Pca {
    pub fn fit(x: &Array2<f64>, target: PcaTarget) -> Result<Pca> {
        let (m, d) = x.dim();
        precondition(m >= 1 && d >= 1, || "PCA needs a non-empty matrix".into())?;
        match target {
            PcaTarget::Components(k) => precondition(k >= 1, || "PCA needs k >= 1".into())?,
            PcaTarget::Variance(v) => {
                precondition(v > 0.0 && v <= 1.0, || format!("retained variance {v} outside (0, 1]"))?
            }
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let xc = x - &mean;

        // (eigenvalue, direction in feature space) pairs, descending.
        let mut pairs: Vec<(f64, Vec<f64>)> = if m < d {
            let gram = xc.dot(&xc.t());
            let eig = SymmetricEigen::new(DMatrix::from_row_slice(m, m, gram.as_slice().unwrap()));
            (0..m)
                .filter(|&i| eig.eigenvalues[i] > 1e-12)
                .map(|i| {
                    let lambda = eig.eigenvalues[i];
                    let u = Array1::from_iter(eig.eigenvectors.column(i).iter().copied());
                    let dir = xc.t().dot(&u) / lambda.sqrt();
                    (lambda, dir.to_vec())
                })
                .collect()
        } else {
            let cov = xc.t().dot(&xc);
            let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov.as_standard_layout().as_slice().unwrap()));
            (0..d)
                .map(|i| (eig.eigenvalues[i].max(0.0), eig.eigenvectors.column(i).iter().copied().collect()))
                .collect()
        };
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let total: f64 = pairs.iter().map(|p| p.0).sum();
        if pairs.is_empty() || total <= 0.0 {
            // Constant data: a single arbitrary axis, every projection zero.
            let mut e0 = vec![0.0; d];
            e0[0] = 1.0;
            pairs = vec![(0.0, e0)];
        }
        let total = total.max(f64::MIN_POSITIVE);
        let k = match target {
            PcaTarget::Components(k) => k.min(pairs.len()),
            PcaTarget::Variance(v) => {
                let mut acc = 0.0;
                let mut k = pairs.len();
                for (i, p) in pairs.iter().enumerate() {
                    acc += p.0 / total;
                    if acc >= v - 1e-12 {
                        k = i + 1;
                        break;
                    }
                }
                k
            }
        };
        let mut components = Array2::zeros((k, d));
        let mut explained = Vec::with_capacity(k);
        for (i, (lambda, dir)) in pairs.into_iter().take(k).enumerate() {
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut dir: Vec<f64> = dir.iter().map(|v| v / norm).collect();
            // Sign convention: the largest-magnitude loading is positive.
            let pivot = dir
                .iter()
                .copied()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if pivot < 0.0 {
                dir.iter_mut().for_each(|v| *v = -*v);
            }
            components.row_mut(i).assign(&Array1::from(dir));
            explained.push(lambda / total);
        }
        Ok(Pca { mean, components, explained })
    }

    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    /// Fraction of total variance explained by each kept component.
    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained
    }

    pub fn transform(&self, x: &Array2<f64>) -> Array2<f64> {
        (x - &self.mean).dot(&self.components.t())
    }

    pub fn inverse_transform(&self, y: &Array2<f64>) -> Array2<f64> {
        y.dot(&self.components) + &self.mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn sq_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        (a - b).mapv(|v| v * v).sum()
    }

    #[test]
    fn exact_low_rank_reconstruction() {
        // Rows lie in the span of two directions (plus an offset).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let u = array![1.0, 0.0, 2.0, -1.0, 0.5];
        let v = array![0.0, 1.0, -1.0, 0.0, 3.0];
        let x = Array2::from_shape_fn((12, 5), |_| 0.0);
        let mut x = x;
        for mut row in x.rows_mut() {
            let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            row.assign(&(&u * a + &v * b + 1.0));
        }
        for rows in [12, 3] {
            let xs = x.slice(ndarray::s![..rows, ..]).to_owned();
            let p = Pca::fit(&xs, PcaTarget::Components(2)).unwrap();
            assert!(sq_err(&p.inverse_transform(&p.transform(&xs)), &xs) < 1e-18 * 1e6);
        }
        let p = Pca::fit(&x, PcaTarget::Variance(0.999)).unwrap();
        assert_eq!(p.k(), 2);
    }

    #[test]
    fn sign_convention_and_ordering() {
        let x = array![[-2.0, 0.0], [2.0, 0.0], [0.0, -1.0], [0.0, 1.0]];
        let p = Pca::fit(&x, PcaTarget::Components(2)).unwrap();
        assert_eq!(p.components().row(0).to_vec(), vec![1.0, 0.0]);
        assert!(p.explained_variance_ratio()[0] > p.explained_variance_ratio()[1]);
    }

    #[test]
    fn constant_rows_project_to_zero() {
        let x = Array2::from_elem((4, 3), 2.0);
        let p = Pca::fit(&x, PcaTarget::Variance(0.95)).unwrap();
        assert!(p.transform(&x).iter().all(|&v| v == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn reconstruction_error_never_grows_with_k(
            vals in proptest::collection::vec(-3.0f64..3.0, 40),
            tall in any::<bool>(),
        ) {
            let x = if tall {
                Array2::from_shape_vec((10, 4), vals).unwrap()
            } else {
                Array2::from_shape_vec((4, 10), vals).unwrap()
            };
            let mut prev = f64::INFINITY;
            for k in 1..=4 {
                let p = Pca::fit(&x, PcaTarget::Components(k)).unwrap();
                let e = sq_err(&p.inverse_transform(&p.transform(&x)), &x);
                prop_assert!(e <= prev + 1e-9);
                prev = e;
            }
        }
    }
}
