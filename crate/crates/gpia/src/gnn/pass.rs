//! Forward and backward passes.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::Rng as _;

use super::{Arch, EmbeddingSet, GnnConfig, GnnModel, Layer};
use crate::error::Result;
use crate::graph::Graph;
use crate::rng::{sub_rng, sub_seed};

const LEAKY_SLOPE: f64 = 0.2;

/// Sparse row-weighted aggregation `out_i = sum_j w_ij z_j`.
pub(crate) struct Agg {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Agg {
    fn apply(&self, z: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows.len(), z.ncols()));
        for (i, row) in self.rows.iter().enumerate() {
            let mut o = out.row_mut(i);
            for &(j, w) in row {
                o.scaled_add(w, &z.row(j));
            }
        }
        out
    }

    fn apply_transpose(&self, d: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows.len(), d.ncols()));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                out.row_mut(j).scaled_add(w, &d.row(i));
            }
        }
        out
    }
}

/// Graph structure as seen by one forward pass.
pub(crate) enum Structure {
    Gcn(Agg),
    /// One sampled mean-aggregation per layer.
    Sage(Vec<Agg>),
    /// Closed neighbourhoods, each starting with the node itself.
    Gat(Vec<Vec<usize>>),
}

fn gcn_agg(g: &Graph) -> Agg {
    let inv: Vec<f64> = (0..g.n()).map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt()).collect();
    Agg {
        rows: (0..g.n())
            .map(|i| {
                std::iter::once((i, inv[i] * inv[i]))
                    .chain(g.neighbors(i).iter().map(|&j| (j, inv[i] * inv[j])))
                    .collect()
            })
            .collect(),
    }
}

/// Fixed-size neighbour sample per node: without replacement when the
/// degree allows it, with replacement otherwise. Isolated nodes aggregate
/// to zero.
fn sage_agg(g: &Graph, k: usize, seed: u64, layer: usize) -> Agg {
    let mut rng = sub_rng(seed, "sage-layer", layer as u64);
    let w = 1.0 / k as f64;
    let rows = (0..g.n())
        .map(|i| {
            let nb = g.neighbors(i);
            if nb.is_empty() {
                Vec::new()
            } else if nb.len() >= k {
                index::sample(&mut rng, nb.len(), k).into_iter().map(|p| (nb[p], w)).collect()
            } else {
                (0..k).map(|_| (nb[rng.random_range(0..nb.len())], w)).collect()
            }
        })
        .collect();
    Agg { rows }
}

pub(crate) fn structure(g: &Graph, cfg: &GnnConfig, sage_seed: u64) -> Structure {
    match cfg.arch {
        Arch::Gcn => Structure::Gcn(gcn_agg(g)),
        Arch::Sage => Structure::Sage(
            (0..=cfg.hidden_layers)
                .map(|l| sage_agg(g, cfg.sage_neighbors, sage_seed, l))
                .collect(),
        ),
        Arch::Gat => Structure::Gat(
            (0..g.n())
                .map(|i| std::iter::once(i).chain(g.neighbors(i).iter().copied()).collect())
                .collect(),
        ),
    }
}

/// Neighbour-sampling seed used during training epoch `epoch`.
pub(crate) fn epoch_seed(cfg: &GnnConfig, epoch: usize) -> u64 {
    sub_seed(cfg.seed, "sage-epoch", epoch as u64)
}

struct HeadCache {
    u: Array2<f64>,
    alpha: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

struct LayerCache {
    input: Array2<f64>,
    /// GCN: `A Z`; SAGE: `[Z | mean(Z_N)]`.
    h: Option<Array2<f64>>,
    heads: Vec<HeadCache>,
    /// Pre-activation output (logits for the last layer).
    y: Array2<f64>,
}

pub(crate) struct Cache {
    layers: Vec<LayerCache>,
    pub(crate) embeddings: Vec<Array2<f64>>,
    pub(crate) probs: Array2<f64>,
}

impl Cache {
    pub(crate) fn logits(&self) -> &Array2<f64> {
        &self.layers.last().expect("at least one layer").y
    }
}

fn relu(y: &Array2<f64>) -> Array2<f64> {
    y.mapv(|v| v.max(0.0))
}

fn leaky(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

fn gat_head(z: &Array2<f64>, head: &super::Head, nbrs: &[Vec<usize>]) -> (HeadCache, Array2<f64>) {
    let u = z.dot(&head.w);
    let a_src = head.a_src.as_ref().expect("GAT head has attention");
    let a_dst = head.a_dst.as_ref().expect("GAT head has attention");
    let s = u.dot(a_dst);
    let t = u.dot(a_src);
    let mut out = Array2::zeros(u.raw_dim());
    let mut alpha = Vec::with_capacity(nbrs.len());
    let mut pre = Vec::with_capacity(nbrs.len());
    for (i, nb) in nbrs.iter().enumerate() {
        let p: Vec<f64> = nb.iter().map(|&j| s[i] + t[j]).collect();
        let e: Vec<f64> = p.iter().map(|&v| leaky(v)).collect();
        let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut a: Vec<f64> = e.iter().map(|&v| (v - max).exp()).collect();
        let sum: f64 = a.iter().sum();
        a.iter_mut().for_each(|v| *v /= sum);
        let mut o = out.row_mut(i);
        for (&j, &w) in nb.iter().zip(&a) {
            o.scaled_add(w, &u.row(j));
        }
        alpha.push(a);
        pre.push(p);
    }
    (HeadCache { u, alpha, pre }, out)
}

pub(crate) fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    p
}

pub(crate) fn run(layers: &[Layer], x: Array2<f64>, st: &Structure) -> Cache {
    let last = layers.len() - 1;
    let mut z = x;
    let mut caches = Vec::with_capacity(layers.len());
    let mut embeddings = Vec::with_capacity(last);
    for (l, layer) in layers.iter().enumerate() {
        let (h, heads, y) = match st {
            Structure::Gcn(agg) => {
                let h = agg.apply(z.view());
                let y = h.dot(&layer.heads[0].w);
                (Some(h), Vec::new(), y)
            }
            Structure::Sage(aggs) => {
                let m = aggs[l].apply(z.view());
                let h = concatenate![Axis(1), z, m];
                let y = h.dot(&layer.heads[0].w);
                (Some(h), Vec::new(), y)
            }
            Structure::Gat(nbrs) => {
                let (hc, outs): (Vec<_>, Vec<_>) =
                    layer.heads.iter().map(|hd| gat_head(&z, hd, nbrs)).unzip();
                let y = if l == last {
                    let mut acc = outs[0].clone();
                    for o in &outs[1..] {
                        acc += o;
                    }
                    acc / outs.len() as f64
                } else {
                    let views: Vec<_> = outs.iter().map(|o| o.view()).collect();
                    ndarray::concatenate(Axis(1), &views).expect("equal head heights")
                };
                (None, hc, y)
            }
        };
        let next = if l == last { None } else { Some(relu(&y)) };
        caches.push(LayerCache { input: z, h, heads, y });
        if let Some(nz) = next {
            embeddings.push(nz.clone());
            z = nz;
        } else {
            break;
        }
    }
    let probs = softmax_rows(&caches[last].y);
    Cache { layers: caches, embeddings, probs }
}

/// Backward pass from `d loss / d logits`; returns the gradient in
/// parameter order.
pub(crate) fn backward(layers: &[Layer], st: &Structure, cache: &Cache, dlogits: Array2<f64>) -> Vec<f64> {
    let last = layers.len() - 1;
    let mut grads: Vec<Layer> = layers.to_vec();
    let mut dy = dlogits;
    for l in (0..=last).rev() {
        let lc = &cache.layers[l];
        let layer = &layers[l];
        let need_dz = l > 0;
        let dz = match st {
            Structure::Gcn(agg) => {
                let w = &layer.heads[0].w;
                grads[l].heads[0].w = lc.h.as_ref().unwrap().t().dot(&dy);
                need_dz.then(|| agg.apply_transpose(dy.dot(&w.t()).view()))
            }
            Structure::Sage(aggs) => {
                let w = &layer.heads[0].w;
                grads[l].heads[0].w = lc.h.as_ref().unwrap().t().dot(&dy);
                need_dz.then(|| {
                    let dh = dy.dot(&w.t());
                    let din = lc.input.ncols();
                    let mut dz = dh.slice(s![.., ..din]).to_owned();
                    dz += &aggs[l].apply_transpose(dh.slice(s![.., din..]));
                    dz
                })
            }
            Structure::Gat(nbrs) => {
                let nh = layer.heads.len();
                let mut dz = Array2::<f64>::zeros(lc.input.raw_dim());
                for (k, (head, hc)) in layer.heads.iter().zip(&lc.heads).enumerate() {
                    let dout = if l == last {
                        &dy / nh as f64
                    } else {
                        let dh = head.w.ncols();
                        dy.slice(s![.., k * dh..(k + 1) * dh]).to_owned()
                    };
                    let (da_src, da_dst, du) = gat_head_backward(head, hc, nbrs, &dout);
                    grads[l].heads[k].w = lc.input.t().dot(&du);
                    grads[l].heads[k].a_src = Some(da_src);
                    grads[l].heads[k].a_dst = Some(da_dst);
                    if need_dz {
                        dz += &du.dot(&head.w.t());
                    }
                }
                need_dz.then_some(dz)
            }
        };
        if let Some(dz) = dz {
            let prev_y = &cache.layers[l - 1].y;
            dy = dz;
            ndarray::Zip::from(&mut dy).and(prev_y).for_each(|d, &y| {
                if y <= 0.0 {
                    *d = 0.0;
                }
            });
        }
    }
    flatten(&grads)
}

/// Returns `(d a_src, d a_dst, d U)` for one attention head.
fn gat_head_backward(
    head: &super::Head,
    hc: &HeadCache,
    nbrs: &[Vec<usize>],
    dout: &Array2<f64>,
) -> (Array1<f64>, Array1<f64>, Array2<f64>) {
    let u = &hc.u;
    let n = u.nrows();
    let mut du = Array2::<f64>::zeros(u.raw_dim());
    let mut ds = Array1::<f64>::zeros(n);
    let mut dt = Array1::<f64>::zeros(n);
    for (i, nb) in nbrs.iter().enumerate() {
        let d_i = dout.row(i);
        let alpha = &hc.alpha[i];
        let dalpha: Vec<f64> = nb.iter().map(|&j| d_i.dot(&u.row(j))).collect();
        let mean: f64 = alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
        for (k, &j) in nb.iter().enumerate() {
            du.row_mut(j).scaled_add(alpha[k], &d_i);
            let de = alpha[k] * (dalpha[k] - mean);
            let dpre = if hc.pre[i][k] > 0.0 { de } else { LEAKY_SLOPE * de };
            ds[i] += dpre;
            dt[j] += dpre;
        }
    }
    let a_src = head.a_src.as_ref().unwrap();
    let a_dst = head.a_dst.as_ref().unwrap();
    let da_dst = u.t().dot(&ds);
    let da_src = u.t().dot(&dt);
    for i in 0..n {
        du.row_mut(i).scaled_add(ds[i], a_dst);
        du.row_mut(i).scaled_add(dt[i], a_src);
    }
    (da_src, da_dst, du)
}

pub(crate) fn flatten(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for h in layers.iter().flat_map(|l| &l.heads) {
        out.extend(h.w.iter());
        for a in [&h.a_src, &h.a_dst].into_iter().flatten() {
            out.extend(a.iter());
        }
    }
    out
}

/// Runs the model on `g`. GraphSAGE draws its neighbour samples from
/// `sage_seed`, or from the model's own seed when `None`.
pub fn forward(m: &GnnModel, g: &Graph, sage_seed: Option<u64>) -> Result<EmbeddingSet> {
    let x = m.inputs(g)?;
    forward_inputs(m, g, x, sage_seed)
}

/// Like [`forward`] but with an explicit input matrix in place of the
/// graph's own features.
pub fn forward_inputs(m: &GnnModel, g: &Graph, x: Array2<f64>, sage_seed: Option<u64>) -> Result<EmbeddingSet> {
    if x.ncols() != m.input_dim() || x.nrows() != g.n() {
        return Err(crate::Error::Config(format!(
            "input matrix is {:?}, model expects ({}, {})",
            x.dim(),
            g.n(),
            m.input_dim()
        )));
    }
    let cfg = m.config();
    let st = structure(g, cfg, sage_seed.unwrap_or(cfg.seed));
    let cache = run(m.layers(), x, &st);
    Ok(EmbeddingSet {
        z: cache.embeddings,
        o: cache.probs,
    })
}
