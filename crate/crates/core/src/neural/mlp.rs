//! Dense feed-forward network with explicit reverse-mode gradients.
//!
//! Weights are row-major `(out_dim, in_dim)`. Forward passes run one sample
//! at a time and return a [`Cache`] of what the backward pass needs.

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Encoder (`input → … → embedding`) followed by a prediction head
/// (`embedding → … → 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    /// Encoder widths; the last entry is the embedding dimension.
    pub encoder_widths: Vec<usize>,
    /// Head widths; the last entry must be 1.
    pub head_widths: Vec<usize>,
    pub dropout: f64,
}

impl ModelConfig {
    pub const DROPOUT: f64 = 0.3;

    /// `input → 1024 → 768 → embedding_dim → 256 → 128 → 1`.
    pub fn standard(input_dim: usize, embedding_dim: usize) -> Self {
        ModelConfig {
            input_dim,
            encoder_widths: vec![1024, 768, embedding_dim],
            head_widths: vec![256, 128, 1],
            dropout: Self::DROPOUT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let widths = std::iter::once(&self.input_dim).chain(&self.encoder_widths).chain(&self.head_widths);
        if widths.clone().any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.head_widths.last() != Some(&1) {
            return Err(Error::Config("the head must end in a single output".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn embedding_dim(&self) -> usize {
        *self.encoder_widths.last().unwrap_or(&self.input_dim)
    }

    /// (in, out, activation, dropout) per layer. Encoder layers are
    /// affine → ReLU → dropout; hidden head layers affine → ReLU; the output
    /// layer is affine only.
    pub fn layer_specs(&self) -> Vec<(usize, usize, Activation, f64)> {
        let mut specs = Vec::new();
        let mut prev = self.input_dim;
        for &w in &self.encoder_widths {
            specs.push((prev, w, Activation::Relu, self.dropout));
            prev = w;
        }
        let last = self.head_widths.len() - 1;
        for (i, &w) in self.head_widths.iter().enumerate() {
            let act = if i == last { Activation::Identity } else { Activation::Relu };
            specs.push((prev, w, act, 0.0));
            prev = w;
        }
        specs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    pub dropout: f64,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    /// Bumped on every parameter update; caches record it.
    version: u64,
}

/// Activations from one forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    version: u64,
    input: Vec<f64>,
    /// Per layer: pre-activation, output after activation and dropout, and
    /// the dropout scale applied per unit (empty when dropout was off).
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> f64 {
        self.post.last().map_or(0.0, |o| o[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            v.iter_mut().for_each(|g| *g *= c);
        }
    }

    /// Gradients in the flat parameter order of [`Mlp::param`].
    pub fn flat(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

// the version counter is bookkeeping, not part of the value
impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl Mlp {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(Error::ShapeMismatch(format!("layer {i} parameter sizes")));
            }
            if i > 0 && layers[i - 1].out_dim != l.in_dim {
                return Err(Error::ShapeMismatch(format!("layer {i} input width")));
            }
        }
        Ok(Mlp { layers, version: 0 })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = config
            .layer_specs()
            .into_iter()
            .map(|(in_dim, out_dim, activation, dropout)| {
                let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit);
                Layer {
                    in_dim,
                    out_dim,
                    activation,
                    dropout,
                    weights: (0..in_dim * out_dim).map(|_| dist.sample(&mut rng)).collect(),
                    bias: vec![0.0; out_dim],
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn touch(&mut self) {
        self.version += 1;
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], mode: Mode, rng: &mut R) -> Result<(f64, Cache)> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!("input has {} values, network expects {}", x.len(), self.input_dim())));
        }
        let mut cache = Cache {
            version: self.version,
            input: x.to_vec(),
            pre: Vec::with_capacity(self.layers.len()),
            post: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
        };
        for layer in &self.layers {
            let input = cache.post.last().unwrap_or(&cache.input);
            let z = layer.affine(input);
            let mut a: Vec<f64> = match layer.activation {
                Activation::Relu => z.iter().map(|v| v.max(0.0)).collect(),
                Activation::Identity => z.clone(),
            };
            let mut mask = Vec::new();
            if mode == Mode::Train && layer.dropout > 0.0 {
                let keep = 1.0 - layer.dropout;
                mask = (0..a.len()).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
                a.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
            }
            cache.pre.push(z);
            cache.post.push(a);
            cache.masks.push(mask);
        }
        Ok((cache.output(), cache))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        // eval mode never draws from the rng
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(x, Mode::Eval, &mut rng)?.0)
    }

    /// Accumulate into `grads` the gradient of a loss whose derivative with
    /// respect to this sample's output is `d_output`.
    pub fn backward(&self, cache: &Cache, d_output: f64, grads: &mut Gradients) -> Result<()> {
        if cache.version != self.version {
            return Err(Error::StaleCache);
        }
        let mut delta = vec![d_output];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            // through dropout, then the activation
            if !cache.masks[i].is_empty() {
                delta.iter_mut().zip(&cache.masks[i]).for_each(|(d, m)| *d *= m);
            }
            if layer.activation == Activation::Relu {
                delta.iter_mut().zip(&cache.pre[i]).for_each(|(d, z)| {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            let input = if i == 0 { &cache.input } else { &cache.post[i - 1] };
            let gw = &mut grads.weights[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
            }
            grads.bias[i].iter_mut().zip(&delta).for_each(|(g, d)| *g += d);
            if i > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
                delta = prev;
            }
        }
        Ok(())
    }

    /// Batch MSE and its exact gradient with respect to every parameter.
    pub fn mse_gradients(&self, caches: &[Cache], targets: &[f64]) -> Result<(f64, Gradients)> {
        if caches.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if caches.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!("{} caches for {} targets", caches.len(), targets.len())));
        }
        let n = caches.len() as f64;
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (c, &t) in caches.iter().zip(targets) {
            let err = c.output() - t;
            loss += err * err;
            self.backward(c, 2.0 * err / n, &mut grads)?;
        }
        Ok((loss / n, grads))
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn locate(&self, mut idx: usize) -> (usize, bool, usize) {
        for (i, l) in self.layers.iter().enumerate() {
            if idx < l.weights.len() {
                return (i, true, idx);
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return (i, false, idx);
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter at a flat index: each layer's weights, then its biases.
    pub fn param(&self, idx: usize) -> f64 {
        let (l, w, i) = self.locate(idx);
        if w {
            self.layers[l].weights[i]
        } else {
            self.layers[l].bias[i]
        }
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        let (l, w, i) = self.locate(idx);
        if w {
            self.layers[l].weights[i] = value;
        } else {
            self.layers[l].bias[i] = value;
        }
        self.version += 1;
    }
}

pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if predictions.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!("{} predictions for {} targets", predictions.len(), targets.len())));
    }
    Ok(predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig { input_dim: 10, encoder_widths: vec![8], head_widths: vec![4, 1], dropout: 0.3 }
    }

    #[test]
    fn standard_shape() {
        let cfg = ModelConfig::standard(1426, 256);
        let dims: Vec<_> = cfg.layer_specs().iter().map(|s| (s.0, s.1)).collect();
        assert_eq!(dims, [(1426, 1024), (1024, 768), (768, 256), (256, 256), (256, 128), (128, 1)]);
        let acts: Vec<_> = cfg.layer_specs().iter().map(|s| s.2).collect();
        assert_eq!(acts.last(), Some(&Activation::Identity));
        assert!(cfg.layer_specs()[..3].iter().all(|s| s.3 == 0.3));
        assert!(cfg.layer_specs()[3..].iter().all(|s| s.3 == 0.0));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = Mlp::init(&tiny(), 7).unwrap();
        assert_eq!(a, Mlp::init(&tiny(), 7).unwrap());
        assert_ne!(a, Mlp::init(&tiny(), 8).unwrap());
        for l in &a.layers {
            assert!(l.bias.iter().all(|&b| b == 0.0));
            let limit = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= limit));
        }
    }

    #[test]
    fn eval_is_deterministic_and_train_drops() {
        let net = Mlp::init(&tiny(), 1).unwrap();
        let x: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(net.forward(&x, Mode::Eval, &mut r1).unwrap().0, net.forward(&x, Mode::Eval, &mut r2).unwrap().0);
        let (_, cache) = net.forward(&x, Mode::Train, &mut r1).unwrap();
        assert!(cache.masks[0].iter().all(|&m| m == 0.0 || (m - 1.0 / 0.7).abs() < 1e-15));
        assert!(cache.masks[1].is_empty());
    }

    #[test]
    fn zero_weights_give_zero() {
        let mut net = Mlp::init(&tiny(), 3).unwrap();
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        assert_eq!(net.predict(&[5.0; 10]).unwrap(), 0.0);
    }

    #[test]
    fn affine_toy() {
        let layer = Layer { in_dim: 1, out_dim: 1, activation: Activation::Identity, dropout: 0.0, weights: vec![2.0], bias: vec![1.0] };
        let net = Mlp::from_layers(vec![layer]).unwrap();
        assert_eq!(net.predict(&[3.0]).unwrap(), 7.0);
        assert!(matches!(net.predict(&[1.0, 2.0]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0], &[2.0]).unwrap(), 4.0);
        assert_eq!(mse_loss(&[1.0, 3.0], &[0.0, 0.0]).unwrap(), 5.0);
        assert!(matches!(mse_loss(&[], &[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn zero_loss_zero_gradients() {
        let layer = Layer { in_dim: 2, out_dim: 1, activation: Activation::Identity, dropout: 0.0, weights: vec![0.5, -1.0], bias: vec![0.25] };
        let net = Mlp::from_layers(vec![layer]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (y, cache) = net.forward(&[1.0, 2.0], Mode::Train, &mut rng).unwrap();
        let (loss, g) = net.mse_gradients(&[cache], &[y]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_scale_linearly() {
        let net = Mlp::init(&ModelConfig { dropout: 0.0, ..tiny() }, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let (_, cache) = net.forward(&x, Mode::Train, &mut rng).unwrap();
        let mut g1 = Gradients::zeros_like(&net);
        net.backward(&cache, 1.0, &mut g1).unwrap();
        let mut g3 = Gradients::zeros_like(&net);
        net.backward(&cache, 3.0, &mut g3).unwrap();
        g1.scale(3.0);
        for (a, b) in g1.flat().iter().zip(g3.flat()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn matches_central_differences() {
        use rand::Rng;
        let net = Mlp::init(&ModelConfig { dropout: 0.0, ..tiny() }, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let ys = [0.3, -0.2, 1.0, 0.5];
        let loss = |n: &Mlp| {
            let p: Vec<f64> = xs.iter().map(|x| n.predict(x).unwrap()).collect();
            mse_loss(&p, &ys).unwrap()
        };
        let caches: Vec<Cache> = xs.iter().map(|x| net.forward(x, Mode::Train, &mut rng).unwrap().1).collect();
        let g = net.mse_gradients(&caches, &ys).unwrap().1.flat();
        let h = 1e-5;
        for i in 0..net.num_params() {
            let mut n = net.clone();
            let p = n.param(i);
            n.set_param(i, p + h);
            let up = loss(&n);
            n.set_param(i, p - h);
            let down = loss(&n);
            let num = (up - down) / (2.0 * h);
            let rel = (g[i] - num).abs() / g[i].abs().max(num.abs()).max(1e-6);
            assert!(rel < 1e-4, "param {i}: {} vs {num}", g[i]);
        }
    }

    #[test]
    fn stale_cache_detected() {
        let mut net = Mlp::init(&tiny(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, cache) = net.forward(&[0.1; 10], Mode::Train, &mut rng).unwrap();
        let p = net.param(0);
        net.set_param(0, p + 1.0);
        let mut g = Gradients::zeros_like(&net);
        assert!(matches!(net.backward(&cache, 1.0, &mut g), Err(Error::StaleCache)));
    }
}
