//! Fit a small network on a noisy linear task with the default optimizer
//! settings (batch 32, Adam 5e-4, plateau patience 8, early stop 15).
//!
//!     cargo run --release --example train_nutrient

use food_compass::neural::{train_matrix, EarlyStopping, ModelConfig, StopDecision, TrainConfig, TrainReport};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr_free::normal;

mod rand_distr_free {
    use rand::Rng;

    /// Box-Muller, enough for a noise term.
    pub fn normal<R: Rng>(rng: &mut R, sd: f64) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

pub fn linear_task(n: usize, dim: usize, noise: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        y.push(row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 0.5 + normal(&mut rng, noise));
        x.push(row);
    }
    (x, y)
}

pub fn run_example() -> food_compass::Result<TrainReport> {
    let (x, y) = linear_task(200, 8, 0.01, 42);
    let model = ModelConfig { input_dim: 8, encoder_widths: vec![32, 16], head_widths: vec![16, 1], dropout: 0.0 };
    let cfg = TrainConfig { max_epochs: 200, ..TrainConfig::default() };
    let trained = train_matrix(&x, &y, &model, &cfg)?;
    let r = &trained.report;
    println!(
        "{} epochs (best {}), final lr {:.1e}, test R² {:.4}, RMSE {:.4}",
        r.epochs_run,
        r.best_epoch,
        r.final_lr,
        r.test.r2.unwrap_or(f64::NAN),
        r.test.rmse
    );

    // a loss stream that stops improving after epoch 3
    let mut stop = EarlyStopping::new(cfg.early_stop_patience, cfg.improvement_threshold);
    let stream = [1.0, 0.8, 0.7, 0.65].into_iter().chain(std::iter::repeat(0.65));
    for (epoch, loss) in stream.enumerate().take(100) {
        if let StopDecision::Stop { best_epoch } = stop.step(loss) {
            println!("plateau: stopped at epoch {epoch}, best epoch {best_epoch}");
            break;
        }
    }
    Ok(trained.report)
}

#[allow(dead_code)]
fn main() -> food_compass::Result<()> {
    run_example().map(|_| ())
}
