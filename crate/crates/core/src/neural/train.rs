//! Mini-batch training loop for a single target.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, Mode, ModelConfig};
use super::optim::{Adam, EarlyStopping, PlateauScheduler, StopDecision};
use crate::error::{Error, Result};
use crate::featurize::ScalerParams;
use crate::metrics::{regression_metrics, RegressionMetrics};

pub const MIN_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub scheduler_patience: usize,
    pub scheduler_factor: f64,
    pub min_lr: f64,
    pub early_stop_patience: usize,
    pub improvement_threshold: f64,
    pub max_epochs: usize,
    /// train / validation / test
    pub split: [f64; 3],
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            scheduler_patience: 8,
            scheduler_factor: 0.5,
            min_lr: 1e-6,
            early_stop_patience: 15,
            improvement_threshold: 1e-6,
            max_epochs: 300,
            split: [0.70, 0.15, 0.15],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size and max_epochs must be positive".into()));
        }
        if self.scheduler_patience == 0 || self.early_stop_patience == 0 {
            return Err(Error::Config("patience values must be at least 1".into()));
        }
        if self.split.iter().any(|f| !(0.0..=1.0).contains(f)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions {:?} must be in [0, 1] and sum to 1", self.split)));
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.scheduler_factor) {
            return Err(Error::Config("lr must be positive and scheduler_factor in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle, then validation and test each take `floor(f·n)` rows
/// (at least one); the rest is training data.
pub fn split_indices(n: usize, fractions: [f64; 3], seed: u64) -> Result<Split> {
    if n < MIN_ROWS {
        return Err(Error::TooFewRows { needed: MIN_ROWS, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(seed, 0));
    let n_val = ((fractions[1] * n as f64).floor() as usize).max(1);
    let n_test = ((fractions[2] * n as f64).floor() as usize).max(1);
    let n_train = n - n_val - n_test;
    Ok(Split {
        train: idx[..n_train].to_vec(),
        val: idx[n_train..n_train + n_val].to_vec(),
        test: idx[n_train + n_val..].to_vec(),
    })
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub final_lr: f64,
    pub train: RegressionMetrics,
    pub test: RegressionMetrics,
    /// Rounded-class accuracy on the test split, for categorical targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_accuracy: Option<f64>,
    pub history: Vec<EpochLog>,
}

/// Network plus the input and target standardization it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNet {
    pub net: Mlp,
    pub scaler: ScalerParams,
    pub target_mean: f64,
    pub target_std: f64,
    pub report: TrainReport,
}

impl TrainedNet {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let z = self.scaler.apply(x)?;
        Ok(self.net.predict(&z)? * self.target_std + self.target_mean)
    }
}

fn eval_loss(net: &Mlp, xs: &[Vec<f64>], ys: &[f64], idx: &[usize]) -> Result<f64> {
    let mut sum = 0.0;
    for &i in idx {
        let e = net.predict(&xs[i])? - ys[i];
        sum += e * e;
    }
    Ok(sum / idx.len() as f64)
}

/// Train one regression network on a prepared feature matrix.
pub fn train_matrix(x: &[Vec<f64>], y: &[f64], model: &ModelConfig, cfg: &TrainConfig) -> Result<TrainedNet> {
    cfg.validate()?;
    model.validate()?;
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} rows for {} targets", x.len(), y.len())));
    }
    let split = split_indices(x.len(), cfg.split, cfg.seed)?;
    if let Some(row) = x.iter().find(|r| r.len() != model.input_dim) {
        return Err(Error::DimensionMismatch { what: "network input", expected: model.input_dim, got: row.len() });
    }

    let train_rows: Vec<&[f64]> = split.train.iter().map(|&i| x[i].as_slice()).collect();
    let scaler = ScalerParams::fit(&train_rows)?;
    let xs: Vec<Vec<f64>> = x.iter().map(|r| scaler.apply(r)).collect::<Result<_>>()?;

    // targets are standardized with training-split moments
    let ty: Vec<f64> = split.train.iter().map(|&i| y[i]).collect();
    let target_mean = ty.iter().sum::<f64>() / ty.len() as f64;
    let var = ty.iter().map(|v| (v - target_mean).powi(2)).sum::<f64>() / ty.len() as f64;
    let target_std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    let ys: Vec<f64> = y.iter().map(|v| (v - target_mean) / target_std).collect();

    let mut net = Mlp::init(model, cfg.seed)?;
    let mut adam = Adam::new(&net, cfg.beta1, cfg.beta2, cfg.eps);
    let mut sched = PlateauScheduler::new(cfg.lr, cfg.scheduler_factor, cfg.scheduler_patience, cfg.min_lr, cfg.improvement_threshold);
    let mut stopper = EarlyStopping::new(cfg.early_stop_patience, cfg.improvement_threshold);
    let mut dropout_rng = stream(cfg.seed, 2);
    let mut shuffle_rng = stream(cfg.seed, 3);

    let mut lr = cfg.lr;
    let mut best = net.clone();
    let mut history = Vec::new();
    let mut stopped_early = false;
    let mut order = split.train.clone();
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut caches = Vec::with_capacity(batch.len());
            let mut targets = Vec::with_capacity(batch.len());
            for &i in batch {
                caches.push(net.forward(&xs[i], Mode::Train, &mut dropout_rng)?.1);
                targets.push(ys[i]);
            }
            let (loss, grads) = net.mse_gradients(&caches, &targets)?;
            loss_sum += loss * batch.len() as f64;
            adam.step(&mut net, &grads, lr)?;
        }
        let train_loss = loss_sum / order.len() as f64;
        let val_loss = eval_loss(&net, &xs, &ys, &split.val)?;
        if !val_loss.is_finite() {
            return Err(Error::Invariant(format!("validation loss became {val_loss} at epoch {epoch}")));
        }
        history.push(EpochLog { epoch, train_loss, val_loss, lr });
        lr = sched.step(val_loss);
        match stopper.step(val_loss) {
            StopDecision::Continue { improved: true } => best = net.clone(),
            StopDecision::Continue { improved: false } => {}
            StopDecision::Stop { .. } => {
                stopped_early = true;
                break;
            }
        }
    }

    let mut out = TrainedNet {
        net: best,
        scaler,
        target_mean,
        target_std,
        report: TrainReport {
            n_train: split.train.len(),
            n_val: split.val.len(),
            n_test: split.test.len(),
            epochs_run: history.len(),
            best_epoch: stopper.best_epoch(),
            best_val_loss: stopper.best(),
            stopped_early,
            final_lr: lr,
            train: RegressionMetrics { n: 0, r2: None, rmse: 0.0, mae: 0.0 },
            test: RegressionMetrics { n: 0, r2: None, rmse: 0.0, mae: 0.0 },
            class_accuracy: None,
            history,
        },
    };
    out.report.train = evaluate(&out, x, y, &split.train)?;
    out.report.test = evaluate(&out, x, y, &split.test)?;
    Ok(out)
}

/// R², RMSE and MAE in original target units over the given rows.
pub fn evaluate(net: &TrainedNet, x: &[Vec<f64>], y: &[f64], rows: &[usize]) -> Result<RegressionMetrics> {
    let pred: Vec<f64> = rows.iter().map(|&i| net.predict(&x[i])).collect::<Result<_>>()?;
    let actual: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    regression_metrics(&pred, &actual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(input_dim: usize) -> ModelConfig {
        ModelConfig { input_dim, encoder_widths: vec![16, 8], head_widths: vec![8, 1], dropout: 0.0 }
    }

    fn linear_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = [0.5, -1.0, 2.0, 0.25];
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y = x.iter().map(|r| r.iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
        (x, y)
    }

    #[test]
    fn split_sizes() {
        let s = split_indices(50, [0.7, 0.15, 0.15], 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (36, 7, 7));
        let mut all: Vec<_> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_eq!(s, split_indices(50, [0.7, 0.15, 0.15], 1).unwrap());
        assert!(matches!(split_indices(5, [0.7, 0.15, 0.15], 1), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn config_checks() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig { split: [0.5, 0.2, 0.2], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrainConfig { early_stop_patience: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn deterministic_and_learns() {
        let (x, y) = linear_data(120, 3);
        let cfg = TrainConfig { max_epochs: 60, lr: 3e-3, seed: 9, ..Default::default() };
        let a = train_matrix(&x, &y, &small(4), &cfg).unwrap();
        let b = train_matrix(&x, &y, &small(4), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.report.test.r2.unwrap() > 0.8, "{:?}", a.report.test);
        // the returned network is the best-validation snapshot
        let best = a.report.history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
        assert!(a.report.best_val_loss >= best && a.report.best_val_loss <= best * (1.0 + 1e-6));
    }

    #[test]
    fn too_few_rows() {
        let (x, y) = linear_data(5, 1);
        assert!(matches!(train_matrix(&x, &y, &small(4), &TrainConfig::default()), Err(Error::TooFewRows { .. })));
    }
}
