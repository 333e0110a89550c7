//! The five pipeline stages behind the `fcs` subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::augment_dataset;
use crate::config::{PipelineConfig, TfidfScope};
use crate::error::{Error, Result};
use crate::featurize::embedding::fnv1a64;
use crate::featurize::{fit_tfidf, EmbeddingSpec, FallbackEmbedding, FeaturizerState, FileEmbedding, TfidfModel};
use crate::ingest::{read_dataset, run_ingest, write_dataset, IngestAudit};
use crate::metrics::median;
use crate::model::{FoodRecord, NutrientProfile, TargetKey};
use crate::neural::{train_target, BundlePredictor, ModelBundle, NutrientModel};
use crate::scorer::{total_fcs, FcsBreakdown};
use crate::validate::{run_validation, write_items_csv, write_report, write_scatter, ValidationReport};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub targets: Option<Vec<TargetKey>>,
    pub jobs: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = &self.targets {
            cfg.train.targets = Some(t.clone());
        }
        if let Some(j) = self.jobs {
            cfg.train.jobs = j;
        }
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| Error::Invariant(e.to_string()))
}

/// Embedding provider for the configured file (if any) at `dim`.
pub fn build_provider(cfg: &PipelineConfig, dim: usize) -> Result<FallbackEmbedding> {
    let file = cfg.paths.embedding_file.as_deref().map(|p| FileEmbedding::load(p, dim)).transpose()?;
    FallbackEmbedding::new(file, dim)
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<IngestAudit> {
    let out = PipelineConfig::require(&cfg.paths.dataset, "dataset")?;
    let inputs: Vec<&Path> = cfg.ingest.sources().into_iter().map(|(_, s)| s.path.as_path()).collect();
    if inputs.is_empty() {
        return Err(Error::Config("ingest.nutrients is not set".into()));
    }
    PipelineConfig::check_exists(&inputs)?;
    cfg.validate()?;
    let (records, audit) = run_ingest(&cfg.ingest, &cfg.denylist()?)?;
    info!(
        "ingest: joined {}, dropped {} missing / {} negative / {} near-zero energy, rejected {} non-food, imputed {} flavonoid, kept {}",
        audit.joined,
        audit.dropped_missing,
        audit.dropped_negative,
        audit.dropped_near_zero_energy,
        audit.rejected_nonfood,
        audit.flavonoid_imputed,
        audit.kept
    );
    ensure_parent(&out)?;
    write_dataset(&out, &records)?;
    info!("wrote {}", out.display());
    Ok(audit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub bundle: PathBuf,
    pub trained: Vec<TargetKey>,
    pub skipped: Vec<(TargetKey, String)>,
    /// Median test R² over trained targets that have one.
    pub median_r2: Option<f64>,
}

/// Per-target seed, so adding or removing targets leaves the others alone.
pub fn target_seed(seed: u64, target: TargetKey) -> u64 {
    seed.wrapping_add(fnv1a64(target.name().as_bytes()))
}

pub fn training_records(cfg: &PipelineConfig) -> Result<Vec<FoodRecord>> {
    let path = PipelineConfig::require(&cfg.paths.dataset, "dataset")?;
    let mut records = read_dataset(&path)?;
    if cfg.train.exclude_labeled {
        let before = records.len();
        records.retain(|r| r.published_fcs.is_none());
        info!("excluded {} labeled rows from training", before - records.len());
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.train.augment {
        let n = records.len();
        records = augment_dataset(&records, &cfg.augmentation()?, cfg.seed);
        info!("augmented {n} rows to {}", records.len());
    }
    Ok(records)
}

fn train_targets(cfg: &PipelineConfig, records: &[FoodRecord]) -> Vec<TargetKey> {
    match &cfg.train.targets {
        Some(t) => {
            let mut t = t.clone();
            t.sort();
            t.dedup();
            t
        }
        None => TargetKey::ALL.iter().copied().filter(|&k| records.iter().any(|r| r.profile.get(k).is_some())).collect(),
    }
}

pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainSummary> {
    let bundle_dir = PipelineConfig::require(&cfg.paths.bundle, "bundle")?;
    PipelineConfig::check_exists(&[PipelineConfig::require(&cfg.paths.dataset, "dataset")?.as_path()])?;
    cfg.validate()?;
    let records = training_records(cfg)?;
    let targets = train_targets(cfg, &records);
    let provider = build_provider(cfg, cfg.featurizer.embedding_dim)?;
    let heuristics = cfg.heuristics()?;
    let stop_words = cfg.stop_words()?;
    let max_features = cfg.featurizer.tfidf_max_features;

    let global_tfidf = match cfg.featurizer.tfidf_scope {
        TfidfScope::Global => {
            let corpus: Vec<&str> = records.iter().map(|r| r.description.as_str()).collect();
            Some(fit_tfidf(&corpus, max_features, &stop_words)?)
        }
        TfidfScope::PerTarget => None,
    };
    let tfidf_for = |target: TargetKey| -> Result<TfidfModel> {
        match &global_tfidf {
            Some(m) => Ok(m.clone()),
            None => {
                let corpus: Vec<&str> =
                    records.iter().filter(|r| r.profile.get(target).is_some()).map(|r| r.description.as_str()).collect();
                fit_tfidf(&corpus, max_features, &stop_words)
            }
        }
    };

    let train_one = |target: TargetKey| -> Result<NutrientModel> {
        let featurizer = FeaturizerState { embedding: provider.spec(), tfidf: tfidf_for(target)?, heuristics: heuristics.spec_for(target)? };
        let model = cfg.model.for_target(target, featurizer.layout().total());
        let mut tc = cfg.train.optimizer.clone();
        tc.seed = target_seed(cfg.seed, target);
        let m = train_target(&records, target, &model, &tc, &featurizer, &provider)?;
        info!(
            "{target}: {} epochs, test r2 {:?} rmse {:.4} mae {:.4}",
            m.report.epochs_run, m.report.test.r2, m.report.test.rmse, m.report.test.mae
        );
        Ok(m)
    };
    let results: Vec<(TargetKey, Result<NutrientModel>)> =
        pool(cfg.train.jobs)?.install(|| targets.par_iter().map(|&t| (t, train_one(t))).collect());

    let mut models = BTreeMap::new();
    let mut skipped = Vec::new();
    for (t, r) in results {
        match r {
            Ok(m) => {
                models.insert(t, m);
            }
            Err(e @ (Error::TooFewRows { .. } | Error::EmptyCorpus)) => {
                warn!("skipping {t}: {e}");
                skipped.push((t, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    if provider.fallback_count() > 0 {
        warn!("{} descriptions were missing from the embedding file and were hashed", provider.fallback_count());
    }

    let descriptions: Vec<&str> = records.iter().map(|r| r.description.as_str()).collect();
    let bundle = ModelBundle::new(models, &descriptions)?;
    bundle.save(&bundle_dir)?;
    write_metrics_table(&bundle_dir.join("metrics.csv"), &bundle.models)?;
    info!("wrote {} models to {}", bundle.models.len(), bundle_dir.display());

    let r2: Vec<f64> = bundle.models.values().filter_map(|m| m.report.test.r2).collect();
    Ok(TrainSummary {
        bundle: bundle_dir,
        trained: bundle.models.keys().copied().collect(),
        skipped,
        median_r2: if r2.is_empty() { None } else { Some(median(&r2)) },
    })
}

/// One row per target: sizes, epochs and train/test R², RMSE, MAE.
pub fn write_metrics_table(path: &Path, models: &BTreeMap<TargetKey, NutrientModel>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    let io = |e: csv::Error| Error::parse(path, e);
    w.write_record([
        "target", "n_train", "n_test", "epochs", "train_r2", "train_rmse", "train_mae", "test_r2", "test_rmse", "test_mae",
        "class_accuracy",
    ])
    .map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (k, m) in models {
        let r = &m.report;
        w.write_record([
            k.name().to_string(),
            r.n_train.to_string(),
            r.n_test.to_string(),
            r.epochs_run.to_string(),
            opt(r.train.r2),
            r.train.rmse.to_string(),
            r.train.mae.to_string(),
            opt(r.test.r2),
            r.test.rmse.to_string(),
            r.test.mae.to_string(),
            opt(r.class_accuracy),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loaded bundle plus a provider that matches what it was trained on.
pub struct Predictor {
    pub bundle: ModelBundle,
    pub provider: FallbackEmbedding,
    pub required: Vec<TargetKey>,
}

impl Predictor {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let dir = PipelineConfig::require(&cfg.paths.bundle, "bundle")?;
        cfg.validate()?;
        let bundle = ModelBundle::load(&dir)?;
        let required = cfg.scoring_config()?.required_targets();
        if let Some(k) = required.iter().find(|k| !bundle.models.contains_key(k)) {
            return Err(Error::MissingModel(k.name().into()));
        }
        let dim = bundle.models.values().next().map_or(cfg.featurizer.embedding_dim, |m| m.featurizer.embedding.dimension);
        let provider = build_provider(cfg, dim)?;
        let spec: EmbeddingSpec = provider.spec();
        if let Some((k, _)) = bundle.models.iter().find(|(_, m)| m.featurizer.embedding != spec) {
            return Err(Error::FingerprintMismatch { target: k.name().into() });
        }
        Ok(Predictor { bundle, provider, required })
    }

    pub fn as_profile_predictor(&self) -> BundlePredictor<'_> {
        BundlePredictor { models: &self.bundle.models, provider: &self.provider, required: self.required.clone() }
    }

    pub fn predict(&self, description: &str) -> Result<NutrientProfile> {
        crate::neural::predict_profile(&self.bundle.models, &self.provider, description, &self.required)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedProfile {
    pub description: String,
    #[serde(flatten)]
    pub profile: NutrientProfile,
}

/// One JSON line per non-blank input line. No input, no output, and the
/// bundle is not touched.
pub fn cmd_predict(cfg: &PipelineConfig, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<usize> {
    let lines: Vec<String> = input
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io("<input>", e))?
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .collect();
    if lines.is_empty() {
        return Ok(0);
    }
    let predictor = Predictor::load(cfg)?;
    for line in &lines {
        let description = line.trim().to_string();
        let profile = predictor.predict(&description)?;
        let json = serde_json::to_string(&PredictedProfile { description, profile }).map_err(|e| Error::Invariant(e.to_string()))?;
        writeln!(out, "{json}").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(lines.len())
}

/// Input to `score`: a per-100-kcal profile (optionally with its
/// description) or a bare description to be predicted first.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreInput {
    Profile { description: String, profile: NutrientProfile },
    Description { description: String },
}

impl ScoreInput {
    /// Parse JSON, keeping serde's line/column in the message.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::parse(source, e))?;
        if value.get("profile").is_some() {
            #[derive(Deserialize)]
            struct P {
                #[serde(default)]
                description: String,
                #[serde(flatten)]
                profile: NutrientProfile,
            }
            let p: P = serde_json::from_value(value).map_err(|e| Error::parse(source, e))?;
            return Ok(ScoreInput::Profile { description: p.description, profile: p.profile });
        }
        match value.get("description").and_then(|d| d.as_str()) {
            Some(d) => Ok(ScoreInput::Description { description: d.to_string() }),
            None => Err(Error::parse(source, "expected an object with `profile` or `description`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreOutput {
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_profile: Option<NutrientProfile>,
    #[serde(flatten)]
    pub breakdown: FcsBreakdown,
}

pub fn cmd_score(cfg: &PipelineConfig, input: ScoreInput) -> Result<ScoreOutput> {
    let scoring = cfg.scoring_config()?;
    match input {
        ScoreInput::Profile { description, profile } => {
            let breakdown = total_fcs(&profile, &description, &scoring)?;
            Ok(ScoreOutput { description, predicted_profile: None, breakdown })
        }
        ScoreInput::Description { description } => {
            let predictor = Predictor::load(cfg)?;
            let profile = predictor.predict(&description)?;
            let breakdown = total_fcs(&profile, &description, &scoring)?;
            Ok(ScoreOutput { description, predicted_profile: Some(profile), breakdown })
        }
    }
}

pub const REPORT_FILE: &str = "report.json";
pub const ITEMS_FILE: &str = "items.csv";
pub const SCATTER_FILE: &str = "scatter.csv";

pub fn cmd_validate(cfg: &PipelineConfig) -> Result<ValidationReport> {
    let data = cfg.paths.validation_dataset.clone().or_else(|| cfg.paths.dataset.clone());
    let data = PipelineConfig::require(&data, "validation_dataset")?;
    let reports = PipelineConfig::require(&cfg.paths.reports, "reports")?;
    PipelineConfig::check_exists(&[data.as_path()])?;
    let records = read_dataset(&data)?;
    let predictor = Predictor::load(cfg)?;
    let scoring = cfg.scoring_config()?;
    let bundle = &predictor.bundle;
    let pp = predictor.as_profile_predictor();
    let (report, items) =
        pool(cfg.train.jobs)?.install(|| run_validation(&pp, &records, &scoring, &cfg.validation, &|d| bundle.overlaps(d)))?;
    if report.overlap_with_training > 0 {
        warn!("{} validation descriptions also appear in the training data", report.overlap_with_training);
    }
    fs::create_dir_all(&reports).map_err(|e| Error::io(&reports, e))?;
    write_report(&reports.join(REPORT_FILE), &report)?;
    write_items_csv(&reports.join(ITEMS_FILE), &items)?;
    write_scatter(&reports.join(SCATTER_FILE), &items)?;
    info!(
        "validated {} items: r = {:?}, MAD = {:.2}, within ±15 = {:?}",
        report.n,
        report.pearson_r,
        report.stats.mad,
        report.within.first().map(|t| t.fraction)
    );
    Ok(report)
}
