//! Exact t-SNE to two dimensions.

use ndarray::{Array2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::pca::{Pca, PcaTarget};
use crate::error::{precondition, Error, Result};
use crate::rng::sub_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TsneParams {
    /// `None` picks 30, or `m / 4` when that is smaller.
    pub perplexity: Option<f64>,
    pub iterations: usize,
    pub learning_rate: f64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams { perplexity: None, iterations: 1000, learning_rate: 200.0 }
    }
}

impl TsneParams {
    pub fn perplexity_for(&self, m: usize) -> f64 {
        self.perplexity.unwrap_or_else(|| 30f64.min(m as f64 / 4.0))
    }
}

const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_ITERS: usize = 100;
const MOMENTUM_SWITCH: usize = 250;

/// Conditional affinities for one row, matching the target perplexity by
/// bisection on the Gaussian precision.
fn row_affinities(d2: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let (mut beta, mut lo, mut hi) = (1.0f64, 0.0f64, f64::INFINITY);
    let mut p = vec![0.0; d2.len()];
    for _ in 0..100 {
        let mut sum = 0.0;
        let min = d2
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        for (j, &d) in d2.iter().enumerate() {
            p[j] = if j == i { 0.0 } else { (-(d - min) * beta).exp() };
            sum += p[j];
        }
        let mut h = 0.0;
        for (j, pj) in p.iter_mut().enumerate() {
            *pj /= sum;
            if j != i && *pj > 0.0 {
                h -= *pj * pj.ln();
            }
        }
        let diff = h - target;
        if diff.abs() < 1e-5 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    p
}

/// Embeds the rows of `x` in two dimensions. Initialised from the first
/// two principal components; the seed only adds a tiny jitter so that
/// coincident rows can separate.
pub fn tsne(x: &Array2<f64>, params: &TsneParams, seed: u64) -> Result<Array2<f64>> {
    let m = x.nrows();
    precondition(m >= 4, || format!("t-SNE needs at least 4 rows, got {m}"))?;
    let perplexity = params.perplexity_for(m);
    precondition(perplexity > 0.0 && perplexity < m as f64 / 3.0, || {
        format!("perplexity {perplexity} must lie in (0, {})", m as f64 / 3.0)
    })?;
    precondition(params.iterations >= 1 && params.learning_rate > 0.0, || {
        "t-SNE needs positive iterations and learning rate".into()
    })?;
    if x.rows().into_iter().all(|r| r == x.row(0)) {
        return Err(Error::AffinityDegenerate("all rows are identical".into()));
    }

    let sq: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
    let gram = x.dot(&x.t());
    let mut p = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        let d2: Vec<f64> = (0..m).map(|j| (sq[i] + sq[j] - 2.0 * gram[[i, j]]).max(0.0)).collect();
        let row = row_affinities(&d2, i, perplexity);
        p.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    let mut p = (&p + &p.t()) / (2.0 * m as f64);
    p.mapv_inplace(|v| v.max(1e-12));
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::AffinityDegenerate("non-finite affinities".into()));
    }

    let pca = Pca::fit(x, PcaTarget::Components(2))?;
    let mut y = Array2::<f64>::zeros((m, 2));
    let proj = pca.transform(x);
    y.slice_mut(ndarray::s![.., ..proj.ncols()]).assign(&proj);
    let std = y.column(0).std(0.0).max(1e-12);
    y.mapv_inplace(|v| v / std * 1e-4);
    let mut rng = sub_rng(seed, "tsne-init", 0);
    y.mapv_inplace(|v| {
        let z: f64 = StandardNormal.sample(&mut rng);
        v + 1e-8 * z
    });

    let mut update = Array2::<f64>::zeros((m, 2));
    let mut gains = Array2::<f64>::ones((m, 2));
    let mut num = Array2::<f64>::zeros((m, m));
    for it in 0..params.iterations {
        let exag = if it < EXAGGERATION_ITERS { EXAGGERATION } else { 1.0 };
        let mut qsum = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let dx = y[[i, 0]] - y[[j, 0]];
                    let dy = y[[i, 1]] - y[[j, 1]];
                    let v = 1.0 / (1.0 + dx * dx + dy * dy);
                    num[[i, j]] = v;
                    qsum += v;
                } else {
                    num[[i, j]] = 0.0;
                }
            }
        }
        let mut grad = Array2::<f64>::zeros((m, 2));
        for i in 0..m {
            let (mut g0, mut g1) = (0.0, 0.0);
            for j in 0..m {
                if i == j {
                    continue;
                }
                let q = (num[[i, j]] / qsum).max(1e-12);
                let w = (exag * p[[i, j]] - q) * num[[i, j]];
                g0 += w * (y[[i, 0]] - y[[j, 0]]);
                g1 += w * (y[[i, 1]] - y[[j, 1]]);
            }
            grad[[i, 0]] = 4.0 * g0;
            grad[[i, 1]] = 4.0 * g1;
        }
        let momentum = if it < MOMENTUM_SWITCH { 0.5 } else { 0.8 };
        ndarray::Zip::from(&mut gains)
            .and(&grad)
            .and(&update)
            .for_each(|g, &d, &u| {
                *g = if (d > 0.0) != (u > 0.0) { *g + 0.2 } else { (*g * 0.8).max(0.01) };
            });
        update = &update * momentum - &(&gains * &grad) * params.learning_rate;
        y += &update;
        let mean = y.mean_axis(Axis(0)).unwrap();
        y -= &mean;
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::AffinityDegenerate("embedding diverged".into()));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn two_clusters() -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        Array2::from_shape_fn((20, 5), |(i, _)| {
            let centre = if i < 10 { 0.0 } else { 10.0 };
            centre + rng.random_range(-0.5..0.5)
        })
    }

    #[test]
    fn separates_two_clusters() {
        let x = two_clusters();
        let y = tsne(&x, &TsneParams::default(), 1).unwrap();
        let centroid = |r: std::ops::Range<usize>| y.slice(ndarray::s![r, ..]).mean_axis(Axis(0)).unwrap();
        let (a, b) = (centroid(0..10), centroid(10..20));
        let gap = (&a - &b).mapv(|v| v * v).sum().sqrt();
        let spread = |r: std::ops::Range<usize>, c: &ndarray::Array1<f64>| {
            r.map(|i| (&y.row(i) - c).mapv(|v| v * v).sum().sqrt()).fold(0.0, f64::max)
        };
        assert!(gap > spread(0..10, &a).max(spread(10..20, &b)), "gap {gap}");
    }

    #[test]
    fn deterministic_and_finite() {
        let x = two_clusters();
        let p = TsneParams { iterations: 200, ..Default::default() };
        let a = tsne(&x, &p, 5).unwrap();
        assert_eq!(a, tsne(&x, &p, 5).unwrap());
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn preconditions() {
        let x = Array2::from_shape_fn((3, 2), |(i, j)| (i + j) as f64);
        assert!(matches!(tsne(&x, &TsneParams::default(), 0), Err(Error::Precondition(_))));
        let same = Array2::from_elem((8, 2), 1.0);
        assert!(matches!(tsne(&same, &TsneParams::default(), 0), Err(Error::AffinityDegenerate(_))));
        let x = two_clusters();
        let p = TsneParams { perplexity: Some(7.0), ..Default::default() };
        assert!(matches!(tsne(&x, &p, 0), Err(Error::Precondition(_))));
    }
}
