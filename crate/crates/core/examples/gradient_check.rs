//! Compare backprop gradients with central finite differences.
//!
//!     cargo run --example gradient_check

use food_compass::neural::{mse_loss, Cache, Mlp, Mode, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest relative error over every parameter of a small random net.
pub fn max_relative_error(seed: u64) -> food_compass::Result<(usize, f64)> {
    let cfg = ModelConfig { input_dim: 6, encoder_widths: vec![8, 5], head_widths: vec![4, 1], dropout: 0.0 };
    let mut net = Mlp::init(&cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    // Biases start at zero. A sample whose hidden layer is fully dead would
    // then sit exactly on a ReLU kink, where the two-sided difference
    // averages the slopes. Random biases keep every input off the kinks.
    for layer in &mut net.layers {
        layer.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
    }
    let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let loss = |n: &Mlp| -> food_compass::Result<f64> {
        let p = xs.iter().map(|x| n.predict(x)).collect::<food_compass::Result<Vec<_>>>()?;
        mse_loss(&p, &ys)
    };
    let caches: Vec<Cache> = xs.iter().map(|x| net.forward(x, Mode::Eval, &mut rng).map(|r| r.1)).collect::<Result<_, _>>()?;
    let analytic = net.mse_gradients(&caches, &ys)?.1.flat();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (i, &g) in analytic.iter().enumerate() {
        let mut n = net.clone();
        let p = n.param(i);
        n.set_param(i, p + h);
        let up = loss(&n)?;
        n.set_param(i, p - h);
        let down = loss(&n)?;
        let numeric = (up - down) / (2.0 * h);
        let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok((analytic.len(), worst))
}

pub fn run_example() -> food_compass::Result<Vec<f64>> {
    let mut errs = Vec::new();
    for seed in [1, 2, 3] {
        let (n, err) = max_relative_error(seed)?;
        println!("seed {seed}: {n} parameters, max relative error {err:.3e}");
        errs.push(err);
    }
    Ok(errs)
}

#[allow(dead_code)]
fn main() -> food_compass::Result<()> {
    run_example().map(|_| ())
}
