//! Per-target models and whole-profile prediction.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::featurize::{EmbeddingProvider, FeaturizerState, ScalerParams};
use crate::model::{Basis, FoodRecord, NutrientProfile, TargetKey};

use super::mlp::{Mlp, ModelConfig};
use super::train::{split_indices, train_matrix, TrainConfig, TrainReport, TrainedNet};

#[derive(Debug, Clone, PartialEq)]
pub struct NutrientModel {
    pub target: TargetKey,
    pub config: ModelConfig,
    pub net: Mlp,
    pub scaler: ScalerParams,
    pub target_mean: f64,
    pub target_std: f64,
    pub featurizer: FeaturizerState,
    pub fingerprint: String,
    pub report: TrainReport,
}

impl NutrientModel {
    pub fn check(&self) -> Result<()> {
        let expected = ModelConfig { input_dim: self.net.input_dim(), ..self.config.clone() };
        let specs = expected.layer_specs();
        let ok = expected == self.config
            && specs.len() == self.net.layers.len()
            && specs.iter().zip(&self.net.layers).all(|(s, l)| (s.0, s.1, s.2) == (l.in_dim, l.out_dim, l.activation));
        if !ok {
            return Err(Error::ShapeMismatch(format!("{}: parameters do not match the model config", self.target)));
        }
        if self.scaler.len() != self.config.input_dim || self.featurizer.layout().total() != self.config.input_dim {
            return Err(Error::ShapeMismatch(format!("{}: input width disagrees with featurizer", self.target)));
        }
        if self.featurizer.fingerprint() != self.fingerprint {
            return Err(Error::FingerprintMismatch { target: self.target.name().into() });
        }
        Ok(())
    }

    /// Raw (unclamped) prediction in target units from a hybrid vector.
    pub fn predict_features(&self, hybrid: &[f64]) -> Result<f64> {
        let z = self.scaler.apply(hybrid)?;
        Ok(self.net.predict(&z)? * self.target_std + self.target_mean)
    }

    pub fn predict_text(&self, provider: &dyn EmbeddingProvider, text: &str) -> Result<f64> {
        let v = self.featurizer.featurize(provider, text)?;
        Ok(clamp_prediction(self.target, self.predict_features(&v.values)?))
    }
}

/// Output clamps: amounts are non-negative, NOVA lives in [1, 4],
/// fermentation in [0, 100] and the fried flag is 0 or 1.
pub fn clamp_prediction(target: TargetKey, raw: f64) -> f64 {
    match target {
        TargetKey::NovaClass => raw.clamp(1.0, 4.0),
        TargetKey::FermentedPct => raw.clamp(0.0, 100.0),
        TargetKey::FriedFlag => raw.clamp(0.0, 1.0).round(),
        _ => raw.max(0.0),
    }
}

pub fn train_target(
    records: &[FoodRecord],
    target: TargetKey,
    model: &ModelConfig,
    cfg: &TrainConfig,
    featurizer: &FeaturizerState,
    provider: &dyn EmbeddingProvider,
) -> Result<NutrientModel> {
    let rows: Vec<&FoodRecord> = records.iter().filter(|r| r.profile.get(target).is_some()).collect();
    if rows.len() < super::train::MIN_ROWS {
        return Err(Error::TooFewRows { needed: super::train::MIN_ROWS, got: rows.len() });
    }
    let width = featurizer.layout().total();
    if model.input_dim != width {
        return Err(Error::DimensionMismatch { what: "model input", expected: width, got: model.input_dim });
    }
    let x: Vec<Vec<f64>> = rows.iter().map(|r| featurizer.featurize(provider, &r.description).map(|v| v.values)).collect::<Result<_>>()?;
    let y: Vec<f64> = rows.iter().map(|r| r.profile.get(target).unwrap_or(0.0)).collect();
    let TrainedNet { net, scaler, target_mean, target_std, mut report } = train_matrix(&x, &y, model, cfg)?;
    let mut out = NutrientModel {
        target,
        config: model.clone(),
        net,
        scaler,
        target_mean,
        target_std,
        featurizer: featurizer.clone(),
        fingerprint: featurizer.fingerprint(),
        report: report.clone(),
    };
    if target.is_categorical() {
        let split = split_indices(x.len(), cfg.split, cfg.seed)?;
        let mut hits = 0usize;
        for &i in &split.test {
            let p = clamp_prediction(target, out.predict_features(&x[i])?);
            if p.round() == y[i].round() {
                hits += 1;
            }
        }
        report.class_accuracy = Some(hits as f64 / split.test.len() as f64);
        out.report = report;
    }
    Ok(out)
}

/// Anything that can turn a description into a per-100-kcal profile.
pub trait ProfilePredictor: Sync {
    fn predict_profile(&self, description: &str) -> Result<NutrientProfile>;
}

pub struct BundlePredictor<'a> {
    pub models: &'a BTreeMap<TargetKey, NutrientModel>,
    pub provider: &'a dyn EmbeddingProvider,
    pub required: Vec<TargetKey>,
}

impl ProfilePredictor for BundlePredictor<'_> {
    fn predict_profile(&self, description: &str) -> Result<NutrientProfile> {
        predict_profile(self.models, self.provider, description, &self.required)
    }
}

/// Run every model on one description. The text is embedded once and
/// featurized once per distinct featurizer fingerprint.
pub fn predict_profile(
    models: &BTreeMap<TargetKey, NutrientModel>,
    provider: &dyn EmbeddingProvider,
    description: &str,
    required: &[TargetKey],
) -> Result<NutrientProfile> {
    if let Some(missing) = required.iter().find(|k| !models.contains_key(k)) {
        return Err(Error::MissingModel(missing.name().into()));
    }
    let embedding = provider.embed(description)?;
    let mut features: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut profile = NutrientProfile::new(Basis::Per100kcal);
    for (&key, model) in models {
        if !features.contains_key(model.fingerprint.as_str()) {
            if embedding.len() != model.featurizer.embedding.dimension {
                return Err(Error::DimensionMismatch {
                    what: "embedding provider",
                    expected: model.featurizer.embedding.dimension,
                    got: embedding.len(),
                });
            }
            let v = model.featurizer.featurize_with(&embedding, description)?;
            features.insert(&model.fingerprint, v.values);
        }
        let raw = model.predict_features(&features[model.fingerprint.as_str()])?;
        profile.set(key, clamp_prediction(key, raw));
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{fit_tfidf, HashedEmbedding, HeuristicConfig};
    use crate::text::default_stop_words;

    fn state(target: TargetKey) -> FeaturizerState {
        FeaturizerState {
            embedding: HashedEmbedding::new(8).unwrap().spec(),
            tfidf: fit_tfidf(&["grilled chicken", "apple pie", "rice"], 16, &default_stop_words()).unwrap(),
            heuristics: HeuristicConfig::default().spec_for(target).unwrap(),
        }
    }

    fn zero_model(target: TargetKey) -> NutrientModel {
        let featurizer = state(target);
        let width = featurizer.layout().total();
        let config = ModelConfig { input_dim: width, encoder_widths: vec![4], head_widths: vec![2, 1], dropout: 0.3 };
        let mut net = Mlp::init(&config, 1).unwrap();
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        NutrientModel {
            target,
            config,
            net,
            scaler: ScalerParams { mean: vec![0.0; width], std: vec![1.0; width] },
            target_mean: 0.0,
            target_std: 1.0,
            fingerprint: featurizer.fingerprint(),
            featurizer,
            report: serde_json::from_str(EMPTY_REPORT).unwrap(),
        }
    }

    const EMPTY_REPORT: &str = r#"{"n_train":0,"n_val":0,"n_test":0,"epochs_run":0,"best_epoch":0,"best_val_loss":0.0,
        "stopped_early":false,"final_lr":0.0,"train":{"n":0,"r2":null,"rmse":0.0,"mae":0.0},
        "test":{"n":0,"r2":null,"rmse":0.0,"mae":0.0},"history":[]}"#;

    #[test]
    fn zero_models_give_zero_profile_with_nova_one() {
        let models: BTreeMap<_, _> = TargetKey::ALL.iter().map(|&k| (k, zero_model(k))).collect();
        let provider = HashedEmbedding::new(8).unwrap();
        let p = predict_profile(&models, &provider, "grilled chicken", TargetKey::ALL).unwrap();
        for &k in TargetKey::ALL {
            let expect = if k == TargetKey::NovaClass { 1.0 } else { 0.0 };
            assert_eq!(p.get(k), Some(expect), "{k}");
        }
        assert_eq!(p, predict_profile(&models, &provider, "grilled chicken", TargetKey::ALL).unwrap());
        assert_eq!(p.basis, Basis::Per100kcal);
    }

    #[test]
    fn clamps() {
        assert_eq!(clamp_prediction(TargetKey::SodiumMg, -3.0), 0.0);
        assert_eq!(clamp_prediction(TargetKey::NovaClass, 4.7), 4.0);
        assert_eq!(clamp_prediction(TargetKey::FermentedPct, 130.0), 100.0);
        assert_eq!(clamp_prediction(TargetKey::FriedFlag, 0.62), 1.0);
        assert_eq!(clamp_prediction(TargetKey::FriedFlag, -0.2), 0.0);
    }

    #[test]
    fn missing_model() {
        let mut models = BTreeMap::new();
        models.insert(TargetKey::FiberG, zero_model(TargetKey::FiberG));
        let provider = HashedEmbedding::new(8).unwrap();
        let err = predict_profile(&models, &provider, "x", &[TargetKey::FiberG, TargetKey::SodiumMg]).unwrap_err();
        assert!(matches!(err, Error::MissingModel(k) if k == "sodium_mg"));
    }

    #[test]
    fn model_check_catches_fingerprint() {
        let mut m = zero_model(TargetKey::FiberG);
        assert!(m.check().is_ok());
        m.fingerprint = "0".repeat(64);
        assert!(matches!(m.check(), Err(Error::FingerprintMismatch { .. })));
    }
}
