//! Full-batch training with Adam and early stopping on test loss.

use ndarray::Array2;

use super::pass::{backward, epoch_seed, run, structure, Cache};
use super::{GnnConfig, GnnModel, StopReason, TrainReport};
use crate::error::{precondition, Error, Result};
use crate::graph::Graph;

/// Called with the 1-based epoch and the flat gradient before each
/// optimiser step; may modify the gradient in place.
pub type GradientHook<'a> = dyn FnMut(usize, &mut [f64]) + 'a;

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            theta[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

fn check_mask(g: &Graph, mask: &[usize], name: &str) -> Result<()> {
    precondition(!mask.is_empty(), || format!("{name} mask is empty"))?;
    if let Some(&bad) = mask.iter().find(|&&i| i >= g.n()) {
        return Err(Error::NodeRange { id: bad, n: g.n() });
    }
    Ok(())
}

fn check_labels(g: &Graph, cfg: &GnnConfig) -> Result<()> {
    if g.labels().iter().any(|&l| l >= cfg.classes) {
        return Err(Error::Config(format!(
            "graph has labels outside [0, {}) configured classes",
            cfg.classes
        )));
    }
    Ok(())
}

/// Mean cross-entropy and accuracy over `mask`, computed from logits.
fn loss_acc(cache: &Cache, labels: &[usize], mask: &[usize]) -> (f64, f64) {
    let logits = cache.logits();
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in mask {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[labels[i]];
        if argmax(cache.probs.row(i).iter().copied()) == labels[i] {
            correct += 1;
        }
    }
    (loss / mask.len() as f64, correct as f64 / mask.len() as f64)
}

pub(crate) fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn dlogits(cache: &Cache, labels: &[usize], mask: &[usize]) -> Array2<f64> {
    let p = &cache.probs;
    let mut d = Array2::zeros(p.raw_dim());
    let scale = 1.0 / mask.len() as f64;
    for &i in mask {
        let mut row = d.row_mut(i);
        row.assign(&p.row(i));
        row[labels[i]] -= 1.0;
        row *= scale;
    }
    d
}

/// Mean cross-entropy of `m` over `mask`.
pub fn masked_loss(m: &GnnModel, g: &Graph, mask: &[usize]) -> Result<f64> {
    check_mask(g, mask, "loss")?;
    let cfg = m.config();
    check_labels(g, cfg)?;
    let st = structure(g, cfg, cfg.seed);
    let cache = run(m.layers(), m.inputs(g)?, &st);
    Ok(loss_acc(&cache, g.labels(), mask).0)
}

/// Gradient of [`masked_loss`] with respect to every parameter, in
/// [`GnnModel::parameters`] order.
pub fn gradient_vector(m: &GnnModel, g: &Graph, mask: &[usize]) -> Result<Vec<f64>> {
    check_mask(g, mask, "gradient")?;
    let cfg = m.config();
    check_labels(g, cfg)?;
    let st = structure(g, cfg, cfg.seed);
    let cache = run(m.layers(), m.inputs(g)?, &st);
    let d = dlogits(&cache, g.labels(), mask);
    Ok(backward(m.layers(), &st, &cache, d))
}

/// Trains a fresh model and returns it at its best test-loss epoch.
pub fn train(g: &Graph, cfg: &GnnConfig, train_mask: &[usize], test_mask: &[usize]) -> Result<(GnnModel, TrainReport)> {
    train_with_hook(g, cfg, train_mask, test_mask, &mut |_, _| {})
}

/// [`train`] with a hook that sees (and may rewrite) each epoch's gradient.
pub fn train_with_hook(
    g: &Graph,
    cfg: &GnnConfig,
    train_mask: &[usize],
    test_mask: &[usize],
    hook: &mut GradientHook<'_>,
) -> Result<(GnnModel, TrainReport)> {
    cfg.validate()?;
    check_mask(g, train_mask, "train")?;
    check_mask(g, test_mask, "test")?;
    let mut in_train = vec![false; g.n()];
    for &i in train_mask {
        in_train[i] = true;
    }
    precondition(test_mask.iter().all(|&i| !in_train[i]), || {
        "train and test masks overlap".into()
    })?;
    check_labels(g, cfg)?;

    let x = g.model_inputs(cfg.drop_property);
    let mut model = GnnModel::init(cfg, x.ncols())?;
    let mut theta = model.parameters();
    let mut adam = Adam::new(theta.len(), cfg.lr);
    let mut best = (f64::INFINITY, theta.clone(), 0usize);
    let mut since_best = 0;
    let mut report = TrainReport {
        train_loss: Vec::new(),
        test_loss: Vec::new(),
        train_acc: Vec::new(),
        test_acc: Vec::new(),
        best_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
    };
    let fixed = match cfg.arch {
        super::Arch::Sage => None,
        _ => Some(structure(g, cfg, cfg.seed)),
    };

    for epoch in 1..=cfg.max_epochs {
        model.set_parameters(&theta)?;
        let sampled;
        let st = match &fixed {
            Some(st) => st,
            None => {
                sampled = structure(g, cfg, epoch_seed(cfg, epoch));
                &sampled
            }
        };
        let cache = run(model.layers(), x.clone(), st);
        let (tr_loss, tr_acc) = loss_acc(&cache, g.labels(), train_mask);
        let (te_loss, te_acc) = loss_acc(&cache, g.labels(), test_mask);
        if !tr_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: tr_loss });
        }
        if !te_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: te_loss });
        }
        report.train_loss.push(tr_loss);
        report.test_loss.push(te_loss);
        report.train_acc.push(tr_acc);
        report.test_acc.push(te_acc);

        if te_loss < best.0 {
            best = (te_loss, theta.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                report.stop_reason = StopReason::Patience;
                break;
            }
        }
        if epoch == cfg.max_epochs {
            break;
        }
        let mut grad = backward(model.layers(), st, &cache, dlogits(&cache, g.labels(), train_mask));
        hook(epoch, &mut grad);
        if let Some(bad) = grad.iter().find(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch, loss: *bad });
        }
        adam.step(&mut theta, &grad);
    }

    model.set_parameters(&best.1)?;
    model.epochs_trained = report.epochs();
    report.best_epoch = best.2;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{forward, Arch};
    use crate::graph::fixtures::with_groups;
    use ndarray::array;

    fn two_class_square() -> Graph {
        // Columns 1-2 one-hot encode the label; column 0 is the property.
        Graph::new(
            array![[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0], [1.0, 1.0, 0.0]],
            vec![1, 1, 0, 0],
            [(0, 1), (1, 2), (2, 3), (3, 0)],
            0,
        )
        .unwrap()
    }

    #[test]
    fn separable_fixture_reaches_full_train_accuracy() {
        let g = two_class_square();
        let cfg = GnnConfig { hidden_dim: 8, max_epochs: 400, patience: 400, ..Default::default() };
        let (m, report) = train(&g, &cfg, &[0, 1, 2], &[3]).unwrap();
        assert_eq!(report.train_acc[report.best_epoch - 1], 1.0);
        let out = forward(&m, &g, None).unwrap();
        for i in 0..3 {
            assert_eq!(argmax(out.o.row(i).iter().copied()), g.labels()[i]);
        }
    }

    #[test]
    fn constant_landscape_stops_after_patience() {
        let mut g = with_groups(&[0, 1, 0, 1, 0], &[(0, 1), (1, 2), (3, 4)]);
        // Zero inputs leave every logit at zero whatever the weights.
        g = Graph::new(
            {
                let mut x = g.features().clone();
                x.column_mut(1).fill(0.0);
                x
            },
            vec![0, 1, 0, 1, 0],
            g.edges().to_vec(),
            0,
        )
        .unwrap();
        let cfg = GnnConfig { hidden_dim: 4, patience: 5, ..Default::default() };
        let (_, report) = train(&g, &cfg, &[0, 1, 2], &[3, 4]).unwrap();
        assert!(report.epochs() <= cfg.patience + 1);
        assert_eq!(report.stop_reason, StopReason::Patience);
        assert_eq!(report.best_epoch, 1);
    }

    #[test]
    fn training_is_deterministic() {
        let g = two_class_square();
        for arch in [Arch::Gcn, Arch::Sage, Arch::Gat] {
            let cfg = GnnConfig { arch, hidden_dim: 4, gat_heads: 2, max_epochs: 30, sage_neighbors: 2, ..Default::default() };
            let a = train(&g, &cfg, &[0, 1], &[2, 3]).unwrap();
            let b = train(&g, &cfg, &[0, 1], &[2, 3]).unwrap();
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn report_sequences_have_equal_length() {
        let g = two_class_square();
        let cfg = GnnConfig { hidden_dim: 4, max_epochs: 17, patience: 100, ..Default::default() };
        let (m, r) = train(&g, &cfg, &[0, 1], &[2, 3]).unwrap();
        assert_eq!(r.epochs(), 17);
        assert_eq!(r.stop_reason, StopReason::MaxEpochs);
        assert_eq!(m.epochs_trained(), 17);
        for s in [&r.test_loss, &r.train_acc, &r.test_acc] {
            assert_eq!(s.len(), 17);
        }
        assert!(r.best_epoch >= 1 && r.best_epoch <= 17);
    }

    #[test]
    fn rejects_bad_masks() {
        let g = two_class_square();
        let cfg = GnnConfig { max_epochs: 2, ..Default::default() };
        assert!(matches!(train(&g, &cfg, &[], &[1]), Err(Error::Precondition(_))));
        assert!(matches!(train(&g, &cfg, &[0, 1], &[1]), Err(Error::Precondition(_))));
        let m = GnnModel::init(&cfg, 2).unwrap();
        assert!(matches!(masked_loss(&m, &g, &[]), Err(Error::Precondition(_))));
        assert!(matches!(gradient_vector(&m, &g, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn divergence_names_the_epoch() {
        let g = two_class_square();
        let cfg = GnnConfig { hidden_dim: 4, max_epochs: 10, ..Default::default() };
        let mut hook = |epoch: usize, grad: &mut [f64]| {
            if epoch == 3 {
                grad[0] = f64::NAN;
            }
        };
        match train_with_hook(&g, &cfg, &[0, 1], &[2, 3], &mut hook) {
            Err(Error::Divergence { epoch, .. }) => assert_eq!(epoch, 3),
            other => panic!("{other:?}"),
        }
    }
}
