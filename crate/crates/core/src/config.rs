//! Pipeline configuration file.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentationRules;
use crate::error::{Error, Result};
use crate::featurize::embedding::DEFAULT_EMBEDDING_DIM;
use crate::featurize::HeuristicConfig;
use crate::ingest::IngestConfig;
use crate::model::TargetKey;
use crate::neural::{ModelConfig, TrainConfig};
use crate::scorer::{Aggregation, GateDirection, KnaGate, ScoringConfig};
use crate::text::{default_denylist, default_stop_words, load_word_list};
use crate::validate::ValidationConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Canonical dataset written by `ingest`, read by `train`.
    pub dataset: Option<PathBuf>,
    /// Labeled dataset for `validate`; defaults to `dataset`.
    pub validation_dataset: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub reports: Option<PathBuf>,
    pub embedding_file: Option<PathBuf>,
    pub scoring_tables: Option<PathBuf>,
    pub heuristics: Option<PathBuf>,
    pub stop_words: Option<PathBuf>,
    pub denylist: Option<PathBuf>,
    pub augmentation: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfidfScope {
    Global,
    PerTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizerSettings {
    pub embedding_dim: usize,
    pub tfidf_max_features: usize,
    pub tfidf_scope: TfidfScope,
}

impl Default for FeaturizerSettings {
    fn default() -> Self {
        FeaturizerSettings { embedding_dim: DEFAULT_EMBEDDING_DIM, tfidf_max_features: 1024, tfidf_scope: TfidfScope::Global }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverride {
    pub embedding_dim: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub head: Option<Vec<usize>>,
    pub dropout: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    /// Encoder widths before the embedding layer.
    pub hidden: Vec<usize>,
    /// Head widths, ending in 1.
    pub head: Vec<usize>,
    pub dropout: f64,
    /// Replaces the registry's per-target embedding dimension when set.
    pub embedding_dim: Option<usize>,
    pub per_target: BTreeMap<TargetKey, ModelOverride>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings { hidden: vec![1024, 768], head: vec![256, 128, 1], dropout: ModelConfig::DROPOUT, embedding_dim: None, per_target: BTreeMap::new() }
    }
}

impl ModelSettings {
    pub fn for_target(&self, target: TargetKey, input_dim: usize) -> ModelConfig {
        let o = self.per_target.get(&target).cloned().unwrap_or_default();
        let emb = o.embedding_dim.or(self.embedding_dim).unwrap_or(target.default_embedding_dim());
        let mut encoder = o.hidden.unwrap_or_else(|| self.hidden.clone());
        encoder.push(emb);
        ModelConfig { input_dim, encoder_widths: encoder, head_widths: o.head.unwrap_or_else(|| self.head.clone()), dropout: o.dropout.unwrap_or(self.dropout) }
    }
}

/// `[train]` mixes pipeline switches with the optimizer settings. serde's
/// `flatten` would silently accept typos, so the split is done by hand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSettings {
    pub augment: bool,
    /// Keep rows that carry a published score out of training.
    pub exclude_labeled: bool,
    pub targets: Option<Vec<TargetKey>>,
    pub jobs: usize,
    #[serde(flatten)]
    pub optimizer: TrainConfig,
}

impl<'de> Deserialize<'de> for TrainSettings {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut table = toml::Table::deserialize(de)?;
        let mut out = TrainSettings::default();
        let mut take = |key: &str| table.remove(key);
        if let Some(v) = take("augment") {
            out.augment = v.try_into().map_err(D::Error::custom)?;
        }
        if let Some(v) = take("exclude_labeled") {
            out.exclude_labeled = v.try_into().map_err(D::Error::custom)?;
        }
        if let Some(v) = take("targets") {
            out.targets = Some(v.try_into().map_err(D::Error::custom)?);
        }
        if let Some(v) = take("jobs") {
            out.jobs = v.try_into().map_err(D::Error::custom)?;
        }
        out.optimizer = toml::Value::Table(table).try_into().map_err(D::Error::custom)?;
        Ok(out)
    }
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings { augment: true, exclude_labeled: false, targets: None, jobs: 1, optimizer: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipConstants {
    Formula,
    Prose,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSettings {
    pub literal_formula_mode: Option<bool>,
    pub fat_gate: Option<GateDirection>,
    pub carb_gate: Option<GateDirection>,
    pub k_na_gate: Option<KnaGate>,
    pub d1_aggregation: Option<Aggregation>,
    pub clip: Option<ClipConstants>,
    pub cured_meat_kcal_per_oz_eq: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub featurizer: FeaturizerSettings,
    pub model: ModelSettings,
    pub train: TrainSettings,
    pub scoring: ScoringSettings,
    pub validation: ValidationConfig,
}

impl PipelineConfig {
    pub fn parse(src: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&src, base).map_err(|e| match e {
            Error::Config(msg) => Error::parse(path, msg),
            other => other,
        })
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let p = &mut self.paths;
        for slot in [
            &mut p.dataset,
            &mut p.validation_dataset,
            &mut p.bundle,
            &mut p.reports,
            &mut p.embedding_file,
            &mut p.scoring_tables,
            &mut p.heuristics,
            &mut p.stop_words,
            &mut p.denylist,
            &mut p.augmentation,
        ] {
            if let Some(path) = slot.as_mut() {
                fix(path);
            }
        }
        for spec in [&mut self.ingest.nutrients, &mut self.ingest.food_patterns, &mut self.ingest.flavonoids, &mut self.ingest.published_scores]
            .into_iter()
            .flatten()
        {
            fix(&mut spec.path);
        }
    }

    pub fn require(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        path.clone().ok_or_else(|| Error::Config(format!("paths.{what} is not set")))
    }

    /// Fail early, naming the path, if an input file is absent.
    pub fn check_exists(paths: &[&Path]) -> Result<()> {
        for p in paths {
            if !p.exists() {
                return Err(Error::io(*p, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory")));
            }
        }
        Ok(())
    }

    /// Optional asset files that are configured.
    pub fn asset_paths(&self) -> Vec<&Path> {
        let p = &self.paths;
        [&p.embedding_file, &p.scoring_tables, &p.heuristics, &p.stop_words, &p.denylist, &p.augmentation]
            .into_iter()
            .flatten()
            .map(PathBuf::as_path)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.train.optimizer.validate()?;
        if self.featurizer.embedding_dim == 0 || self.featurizer.tfidf_max_features == 0 {
            return Err(Error::Config("featurizer sizes must be positive".into()));
        }
        if self.train.jobs == 0 {
            return Err(Error::Config("train.jobs must be at least 1".into()));
        }
        Self::check_exists(&self.asset_paths())?;
        self.scoring_config()?;
        Ok(())
    }

    pub fn scoring_config(&self) -> Result<ScoringConfig> {
        let mut cfg = match &self.paths.scoring_tables {
            Some(p) => ScoringConfig::load(p)?,
            None => ScoringConfig::default(),
        };
        let s = &self.scoring;
        if let Some(v) = s.literal_formula_mode {
            cfg.literal_formula_mode = v;
        }
        if let Some(v) = s.fat_gate {
            cfg.gates.fat = v;
        }
        if let Some(v) = s.carb_gate {
            cfg.gates.carb = v;
        }
        if let Some(v) = s.k_na_gate {
            cfg.gates.k_na = v;
        }
        if let Some(v) = s.d1_aggregation {
            cfg.d1_aggregation = v;
        }
        if let Some(v) = s.cured_meat_kcal_per_oz_eq {
            cfg.cured_meat_kcal_per_oz_eq = v;
        }
        if s.clip == Some(ClipConstants::Prose) {
            cfg = cfg.with_prose_clip();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn heuristics(&self) -> Result<HeuristicConfig> {
        match &self.paths.heuristics {
            Some(p) => HeuristicConfig::load(p),
            None => Ok(HeuristicConfig::default()),
        }
    }

    pub fn stop_words(&self) -> Result<std::collections::BTreeSet<String>> {
        match &self.paths.stop_words {
            Some(p) => load_word_list(p),
            None => Ok(default_stop_words()),
        }
    }

    pub fn denylist(&self) -> Result<std::collections::BTreeSet<String>> {
        match &self.paths.denylist {
            Some(p) => load_word_list(p),
            None => Ok(default_denylist()),
        }
    }

    pub fn augmentation(&self) -> Result<AugmentationRules> {
        match &self.paths.augmentation {
            Some(p) => AugmentationRules::load(p),
            None => Ok(AugmentationRules::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = PipelineConfig::parse("", Path::new("/base")).unwrap();
        assert_eq!(cfg.train.optimizer, TrainConfig::default());
        assert_eq!(cfg.featurizer.embedding_dim, 384);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::parse("sed = 3", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("[train]\nbatch = 3", Path::new(".")).is_err());
    }

    #[test]
    fn paths_resolve_against_base() {
        let cfg = PipelineConfig::parse("[paths]\ndataset = \"out/d.jsonl\"\nbundle = \"/abs/b\"", Path::new("/cfg")).unwrap();
        assert_eq!(cfg.paths.dataset.unwrap(), Path::new("/cfg/out/d.jsonl"));
        assert_eq!(cfg.paths.bundle.unwrap(), Path::new("/abs/b"));
    }

    #[test]
    fn train_and_model_settings() {
        let src = "[train]\nbatch_size = 8\nmax_epochs = 5\naugment = false\n[model]\nhidden = [16]\nhead = [4, 1]\n[model.per_target.fiber_g]\nembedding_dim = 3\n";
        let cfg = PipelineConfig::parse(src, Path::new(".")).unwrap();
        assert_eq!(cfg.train.optimizer.batch_size, 8);
        assert!(!cfg.train.augment);
        let m = cfg.model.for_target(TargetKey::FiberG, 10);
        assert_eq!(m.encoder_widths, vec![16, 3]);
        let m = cfg.model.for_target(TargetKey::Seafood, 10);
        assert_eq!(m.encoder_widths, vec![16, 1024]);
    }

    #[test]
    fn scoring_overrides() {
        let cfg = PipelineConfig::parse("[scoring]\nclip = \"prose\"\nk_na_gate = \"both\"", Path::new(".")).unwrap();
        let s = cfg.scoring_config().unwrap();
        assert_eq!(s.low_clip, -12.80);
        assert_eq!(s.gates.k_na, KnaGate::Both);
    }

    #[test]
    fn missing_asset_named() {
        let cfg = PipelineConfig::parse("[paths]\nstop_words = \"nope.txt\"", Path::new("/definitely/not")).unwrap();
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("nope.txt"));
    }
}
