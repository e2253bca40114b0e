//! Small fully-connected networks trained full-batch with Adam. Shared by
//! the MLP attack classifier, the alignment autoencoder and the
//! attribute-inference baseline.

use ndarray::{Array1, Array2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub(crate) enum Act {
    Relu,
    Identity,
    Sigmoid,
}

impl Act {
    fn apply(self, y: &mut Array2<f64>) {
        match self {
            Act::Relu => y.mapv_inplace(|v| v.max(0.0)),
            Act::Identity => {}
            Act::Sigmoid => y.mapv_inplace(sigmoid),
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Loss {
    /// Binary cross-entropy on a single sigmoid output.
    Bce,
    /// Mean squared error over every output entry.
    Mse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct Dense {
    #[serde(with = "crate::serial::matrix")]
    pub w: Array2<f64>,
    #[serde(with = "crate::serial::vector")]
    pub b: Array1<f64>,
    pub act: Act,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases. `sizes` includes the input width.
    pub fn new(sizes: &[usize], acts: &[Act], rng: &mut Rng) -> Self {
        assert_eq!(sizes.len(), acts.len() + 1);
        let layers = sizes
            .windows(2)
            .zip(acts)
            .map(|(w, &act)| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Dense {
                    w: Array2::from_shape_simple_fn((w[0], w[1]), || rng.random_range(-limit..limit)),
                    b: Array1::zeros(w[1]),
                    act,
                }
            })
            .collect();
        Mlp { layers }
    }

    /// Activations of every layer, starting with the input itself.
    fn activations(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.clone()];
        for l in &self.layers {
            let mut y = acts.last().unwrap().dot(&l.w) + &l.b;
            l.act.apply(&mut y);
            acts.push(y);
        }
        acts
    }

    pub fn predict(&self, x: &Array2<f64>) -> Array2<f64> {
        self.activations(x).pop().unwrap()
    }

    /// Output of the first `k` layers.
    pub fn partial(&self, x: &Array2<f64>, k: usize) -> Array2<f64> {
        self.activations(x).swap_remove(k)
    }

    fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    /// Loss value and flat gradient (weights then biases per layer).
    fn loss_grad(&self, x: &Array2<f64>, y: &Array2<f64>, loss: Loss) -> (f64, Vec<f64>) {
        let acts = self.activations(x);
        let out = acts.last().unwrap();
        let m = x.nrows() as f64;
        let (value, mut delta) = match loss {
            Loss::Bce => {
                let eps = 1e-12;
                let v = out
                    .iter()
                    .zip(y)
                    .map(|(&p, &t)| -(t * p.max(eps).ln() + (1.0 - t) * (1.0 - p).max(eps).ln()))
                    .sum::<f64>()
                    / m;
                (v, (out - y) / m)
            }
            Loss::Mse => {
                let k = out.len() as f64;
                let diff = out - y;
                (diff.mapv(|d| d * d).sum() / k, diff * (2.0 / k))
            }
        };
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            // `delta` is d loss / d pre-activation for Bce at the output
            // (the sigmoid folds in), otherwise apply the activation
            // derivative here.
            let is_out = l + 1 == self.layers.len();
            if !(is_out && loss == Loss::Bce) {
                match layer.act {
                    Act::Relu => delta.zip_mut_with(&acts[l + 1], |d, &a| {
                        if a <= 0.0 {
                            *d = 0.0
                        }
                    }),
                    Act::Identity => {}
                    Act::Sigmoid => delta.zip_mut_with(&acts[l + 1], |d, &a| *d *= a * (1.0 - a)),
                }
            }
            grads.push((acts[l].t().dot(&delta), delta.sum_axis(Axis(0))));
            if l > 0 {
                delta = delta.dot(&layer.w.t());
            }
        }
        grads.reverse();
        let flat = grads
            .into_iter()
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .collect();
        (value, flat)
    }

    /// Full-batch Adam for `epochs` steps; returns the final loss.
    pub fn fit(&mut self, x: &Array2<f64>, y: &Array2<f64>, loss: Loss, epochs: usize, lr: f64) -> f64 {
        let n = self.num_params();
        let (mut m1, mut m2) = (vec![0.0; n], vec![0.0; n]);
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let mut last = f64::NAN;
        for t in 1..=epochs {
            let (value, g) = self.loss_grad(x, y, loss);
            last = value;
            let c1 = 1.0 - b1.powi(t as i32);
            let c2 = 1.0 - b2.powi(t as i32);
            for (i, p) in self.params_mut().enumerate() {
                m1[i] = b1 * m1[i] + (1.0 - b1) * g[i];
                m2[i] = b2 * m2[i] + (1.0 - b2) * g[i] * g[i];
                *p -= lr * (m1[i] / c1) / ((m2[i] / c2).sqrt() + eps);
            }
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng;

    fn finite_difference(loss: Loss, out_act: Act, y: Array2<f64>) {
        let mut r = rng(4);
        let x = Array2::from_shape_simple_fn((5, 3), || r.random_range(-1.0..1.0));
        let mut net = Mlp::new(&[3, 4, y.ncols()], &[Act::Relu, out_act], &mut r);
        for l in &mut net.layers {
            l.b.mapv_inplace(|_| r.random_range(-0.5..0.5));
        }
        let (_, g) = net.loss_grad(&x, &y, loss);
        let h = 1e-6;
        for (k, &gk) in g.iter().enumerate() {
            let orig = *net.params_mut().nth(k).unwrap();
            *net.params_mut().nth(k).unwrap() = orig + h;
            let up = net.loss_grad(&x, &y, loss).0;
            *net.params_mut().nth(k).unwrap() = orig - h;
            let down = net.loss_grad(&x, &y, loss).0;
            *net.params_mut().nth(k).unwrap() = orig;
            let num = (up - down) / (2.0 * h);
            assert!((num - gk).abs() < 1e-6 * (1.0 + num.abs()), "{loss:?} param {k}: {num} vs {gk}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        finite_difference(Loss::Bce, Act::Sigmoid, Array2::from_shape_vec((5, 1), vec![1., 0., 1., 1., 0.]).unwrap());
        finite_difference(Loss::Mse, Act::Identity, Array2::from_elem((5, 2), 0.3));
    }

    #[test]
    fn fit_reduces_loss() {
        let mut r = rng(1);
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i as f64 / 10.0) - j as f64);
        let y = x.map_axis(Axis(1), |row| f64::from(row[0] > 1.0)).insert_axis(Axis(1));
        let mut net = Mlp::new(&[2, 8, 1], &[Act::Relu, Act::Sigmoid], &mut r);
        let before = net.loss_grad(&x, &y, Loss::Bce).0;
        let after = net.fit(&x, &y, Loss::Bce, 300, 0.01);
        assert!(after < before * 0.5, "{before} -> {after}");
    }
}
