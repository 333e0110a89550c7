//! Adam, a reduce-on-plateau schedule and early stopping.

use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Mlp, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam { beta1, beta2, eps, step: 0, m: Gradients::zeros_like(net), v: Gradients::zeros_like(net) }
    }

    pub fn with_defaults(net: &Mlp) -> Self {
        Self::new(net, 0.9, 0.999, 1e-8)
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients, lr: f64) -> Result<()> {
        let shapes_match = |g: &Gradients| {
            g.weights.len() == net.layers.len()
                && net.layers.iter().zip(&g.weights).zip(&g.bias).all(|((l, w), b)| l.weights.len() == w.len() && l.bias.len() == b.len())
        };
        if !shapes_match(grads) || !shapes_match(&self.m) {
            return Err(Error::ShapeMismatch("gradients do not match parameters".into()));
        }
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let eps = self.eps;
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        };
        for (i, layer) in net.layers.iter_mut().enumerate() {
            update(&mut layer.weights, &grads.weights[i], &mut self.m.weights[i], &mut self.v.weights[i]);
            update(&mut layer.bias, &grads.bias[i], &mut self.m.bias[i], &mut self.v.bias[i]);
        }
        net.touch();
        Ok(())
    }
}

fn improves(val: f64, best: f64, threshold: f64) -> bool {
    if best.is_infinite() {
        return val < best;
    }
    val < best - threshold * best.abs()
}

/// Halve the learning rate once validation loss has failed to improve for
/// more than `patience` epochs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    pub threshold: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize, min_lr: f64, threshold: f64) -> Self {
        PlateauScheduler { lr, factor, patience, min_lr, threshold, best: f64::INFINITY, bad_epochs: 0 }
    }

    pub fn step(&mut self, val_loss: f64) -> f64 {
        if improves(val_loss, self.best, self.threshold) {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
        }
        if self.bad_epochs > self.patience {
            self.lr = (self.lr * self.factor).max(self.min_lr);
            self.bad_epochs = 0;
        }
        self.lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopDecision {
    Continue { improved: bool },
    Stop { best_epoch: usize },
}

/// Stops on the `patience + 1`-th consecutive epoch without improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    pub patience: usize,
    pub threshold: f64,
    best: f64,
    best_epoch: usize,
    bad_epochs: usize,
    epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, threshold: f64) -> Self {
        EarlyStopping { patience, threshold, best: f64::INFINITY, best_epoch: 0, bad_epochs: 0, epoch: 0 }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn step(&mut self, val_loss: f64) -> StopDecision {
        let epoch = self.epoch;
        self.epoch += 1;
        if improves(val_loss, self.best, self.threshold) {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            return StopDecision::Continue { improved: true };
        }
        self.bad_epochs += 1;
        if self.bad_epochs > self.patience {
            StopDecision::Stop { best_epoch: self.best_epoch }
        } else {
            StopDecision::Continue { improved: false }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::mlp::{Activation, Layer};

    #[test]
    fn first_adam_step_moves_by_lr() {
        let layer = Layer { in_dim: 1, out_dim: 1, activation: Activation::Identity, dropout: 0.0, weights: vec![1.0], bias: vec![0.0] };
        let mut net = Mlp::from_layers(vec![layer]).unwrap();
        let mut adam = Adam::with_defaults(&net);
        let g = Gradients { weights: vec![vec![0.5]], bias: vec![vec![-2.0]] };
        adam.step(&mut net, &g, 0.01).unwrap();
        assert!((net.layers[0].weights[0] - 0.99).abs() < 1e-9);
        assert!((net.layers[0].bias[0] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn adam_shape_mismatch() {
        let layer = Layer { in_dim: 2, out_dim: 1, activation: Activation::Identity, dropout: 0.0, weights: vec![1.0, 1.0], bias: vec![0.0] };
        let mut net = Mlp::from_layers(vec![layer]).unwrap();
        let mut adam = Adam::with_defaults(&net);
        let g = Gradients { weights: vec![vec![0.5]], bias: vec![vec![0.0]] };
        assert!(matches!(adam.step(&mut net, &g, 0.01), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn plateau_halves_after_patience() {
        let mut s = PlateauScheduler::new(5e-4, 0.5, 8, 1e-6, 1e-6);
        s.step(1.0);
        for _ in 0..8 {
            assert_eq!(s.step(1.0), 5e-4);
        }
        assert_eq!(s.step(1.0), 2.5e-4);
        let mut s = PlateauScheduler::new(2e-6, 0.5, 0, 1e-6, 1e-6);
        s.step(1.0);
        s.step(1.0);
        assert_eq!(s.step(1.0), 1e-6);
    }

    #[test]
    fn early_stop_on_sixteenth_bad_epoch() {
        let mut es = EarlyStopping::new(15, 1e-6);
        assert_eq!(es.step(1.0), StopDecision::Continue { improved: true });
        for _ in 0..15 {
            assert_eq!(es.step(1.0), StopDecision::Continue { improved: false });
        }
        assert_eq!(es.step(1.0), StopDecision::Stop { best_epoch: 0 });
    }
}
