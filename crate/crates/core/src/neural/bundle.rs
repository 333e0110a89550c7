//! On-disk model files and bundle directories.
//!
//! Model file layout (all integers little-endian):
//!
//! ```text
//! offset  size  content
//! 0       8     magic "FCSMODEL"
//! 8       4     u32 manifest length M
//! 12      M     manifest, UTF-8 JSON
//! 12+M    8·K   f64 blob; the manifest addresses it as (offset, len) in values
//! ```
//!
//! The manifest carries the format version, the model config, training
//! report, featurizer state and fingerprint, and the SHA-256 of the blob.
//! A bundle directory holds one such file per target and `index.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mlp::{Activation, Layer, Mlp, ModelConfig};
use super::model::NutrientModel;
use super::train::TrainReport;
use crate::error::{Error, Result};
use crate::featurize::{FeaturizerState, ScalerParams};
use crate::metrics::RegressionMetrics;
use crate::model::TargetKey;

pub const MAGIC: &[u8; 8] = b"FCSMODEL";
pub const FORMAT_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerEntry {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    dropout: f64,
    weights: Block,
    bias: Block,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    target: TargetKey,
    config: ModelConfig,
    target_mean: f64,
    target_std: f64,
    fingerprint: String,
    report: TrainReport,
    featurizer: FeaturizerState,
    layers: Vec<LayerEntry>,
    scaler_mean: Block,
    scaler_std: Block,
    blob_values: usize,
    blob_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_model(model: &NutrientModel) -> Result<Vec<u8>> {
    let mut blob: Vec<f64> = Vec::new();
    let mut push = |v: &[f64]| {
        let b = Block { offset: blob.len(), len: v.len() };
        blob.extend_from_slice(v);
        b
    };
    let layers: Vec<LayerEntry> = model
        .net
        .layers
        .iter()
        .map(|l| LayerEntry {
            in_dim: l.in_dim,
            out_dim: l.out_dim,
            activation: l.activation,
            dropout: l.dropout,
            weights: push(&l.weights),
            bias: push(&l.bias),
        })
        .collect();
    let scaler_mean = push(&model.scaler.mean);
    let scaler_std = push(&model.scaler.std);
    let bytes: Vec<u8> = blob.iter().flat_map(|v| v.to_le_bytes()).collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        target: model.target,
        config: model.config.clone(),
        target_mean: model.target_mean,
        target_std: model.target_std,
        fingerprint: model.fingerprint.clone(),
        report: model.report.clone(),
        featurizer: model.featurizer.clone(),
        layers,
        scaler_mean,
        scaler_std,
        blob_values: blob.len(),
        blob_sha256: sha256_hex(&bytes),
    };
    let json = serde_json::to_vec(&manifest).map_err(|e| Error::Invariant(e.to_string()))?;
    let mut out = Vec::with_capacity(12 + json.len() + bytes.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&bytes);
    Ok(out)
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<NutrientModel> {
    let corrupt = |msg: &str| Error::CorruptFile { path: path.to_path_buf(), msg: msg.to_string() };
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic or truncated header"));
    }
    let m_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let m_end = 12usize.checked_add(m_len).filter(|&e| e <= bytes.len()).ok_or_else(|| corrupt("truncated manifest"))?;
    let raw: serde_json::Value = serde_json::from_slice(&bytes[12..m_end]).map_err(|e| corrupt(&format!("manifest: {e}")))?;
    let found = raw.get("format_version").and_then(|v| v.as_u64()).ok_or_else(|| corrupt("manifest lacks format_version"))?;
    if found != FORMAT_VERSION as u64 {
        return Err(Error::VersionMismatch { path: path.to_path_buf(), found: found as u32, expected: FORMAT_VERSION });
    }
    let manifest: Manifest = serde_json::from_value(raw).map_err(|e| corrupt(&format!("manifest: {e}")))?;
    let blob = &bytes[m_end..];
    if blob.len() != manifest.blob_values * 8 {
        return Err(corrupt(&format!("blob has {} bytes, expected {}", blob.len(), manifest.blob_values * 8)));
    }
    if sha256_hex(blob) != manifest.blob_sha256 {
        return Err(corrupt("blob checksum mismatch"));
    }
    let values: Vec<f64> = blob.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let take = |b: Block| -> Result<Vec<f64>> {
        values.get(b.offset..b.offset + b.len).map(<[f64]>::to_vec).ok_or_else(|| corrupt("block out of range"))
    };
    let layers = manifest
        .layers
        .iter()
        .map(|l| {
            Ok(Layer {
                in_dim: l.in_dim,
                out_dim: l.out_dim,
                activation: l.activation,
                dropout: l.dropout,
                weights: take(l.weights)?,
                bias: take(l.bias)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = Mlp::from_layers(layers).map_err(|e| corrupt(&e.to_string()))?;
    let model = NutrientModel {
        target: manifest.target,
        config: manifest.config,
        net,
        scaler: ScalerParams { mean: take(manifest.scaler_mean)?, std: take(manifest.scaler_std)? },
        target_mean: manifest.target_mean,
        target_std: manifest.target_std,
        featurizer: manifest.featurizer,
        fingerprint: manifest.fingerprint,
        report: manifest.report,
    };
    model.check()?;
    Ok(model)
}

pub fn save_model(model: &NutrientModel, path: &Path) -> Result<()> {
    fs::write(path, encode_model(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<NutrientModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub sha256: String,
    pub fingerprint: String,
    pub epochs_run: usize,
    pub test: RegressionMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleIndex {
    pub format_version: u32,
    pub models: BTreeMap<TargetKey, IndexEntry>,
    /// Truncated hashes of normalized training descriptions, sorted.
    pub training_descriptions: Vec<String>,
}

/// Hash used to spot overlap between training and validation text.
pub fn description_hash(text: &str) -> String {
    let norm = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    sha256_hex(norm.as_bytes())[..16].to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub index: BundleIndex,
    pub models: BTreeMap<TargetKey, NutrientModel>,
}

impl ModelBundle {
    pub fn new<S: AsRef<str>>(models: BTreeMap<TargetKey, NutrientModel>, training_descriptions: &[S]) -> Result<Self> {
        let mut hashes: Vec<String> = training_descriptions.iter().map(|d| description_hash(d.as_ref())).collect();
        hashes.sort();
        hashes.dedup();
        let mut entries = BTreeMap::new();
        for (&k, m) in &models {
            entries.insert(
                k,
                IndexEntry {
                    file: format!("{}.fcsm", k.name()),
                    sha256: sha256_hex(&encode_model(m)?),
                    fingerprint: m.fingerprint.clone(),
                    epochs_run: m.report.epochs_run,
                    test: m.report.test,
                    class_accuracy: m.report.class_accuracy,
                },
            );
        }
        Ok(ModelBundle { index: BundleIndex { format_version: FORMAT_VERSION, models: entries, training_descriptions: hashes }, models })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (k, m) in &self.models {
            let entry = &self.index.models[k];
            let path = dir.join(&entry.file);
            fs::write(&path, encode_model(m)?).map_err(|e| Error::io(&path, e))?;
        }
        let path = dir.join(INDEX_FILE);
        let json = serde_json::to_string_pretty(&self.index).map_err(|e| Error::Invariant(e.to_string()))?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(INDEX_FILE);
        let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingModel(format!("bundle index {}", path.display())),
            _ => Error::io(&path, e),
        })?;
        let index: BundleIndex = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e))?;
        if index.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch { path, found: index.format_version, expected: FORMAT_VERSION });
        }
        let mut models = BTreeMap::new();
        for (&k, entry) in &index.models {
            let file: PathBuf = dir.join(&entry.file);
            let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(Error::CorruptFile { path: file, msg: "file checksum differs from index".into() });
            }
            let model = decode_model(&bytes, &file)?;
            if model.target != k || model.fingerprint != entry.fingerprint {
                return Err(Error::FingerprintMismatch { target: k.name().into() });
            }
            models.insert(k, model);
        }
        Ok(ModelBundle { index, models })
    }

    pub fn overlaps(&self, description: &str) -> bool {
        self.index.training_descriptions.binary_search(&description_hash(description)).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{fit_tfidf, HashedEmbedding, HeuristicConfig};
    use crate::model::{Basis, FoodRecord, NutrientProfile};
    use crate::neural::train::TrainConfig;
    use crate::neural::train_target;
    use crate::text::default_stop_words;

    fn trained() -> NutrientModel {
        let descs = ["apple", "banana bread", "grilled chicken", "white rice", "black beans", "salmon fillet", "whole milk", "orange juice", "potato chips", "green salad", "peanut butter", "oatmeal"];
        let records: Vec<FoodRecord> = descs
            .iter()
            .enumerate()
            .map(|(i, d)| FoodRecord::new(format!("{i}"), *d, NutrientProfile::with_values(Basis::Per100kcal, [(TargetKey::FiberG, i as f64 * 0.3)])))
            .collect();
        let provider = HashedEmbedding::new(8).unwrap();
        let featurizer = FeaturizerState {
            embedding: provider.spec(),
            tfidf: fit_tfidf(&descs, 32, &default_stop_words()).unwrap(),
            heuristics: HeuristicConfig::default().spec_for(TargetKey::FiberG).unwrap(),
        };
        let cfg = ModelConfig { input_dim: featurizer.layout().total(), encoder_widths: vec![6], head_widths: vec![4, 1], dropout: 0.3 };
        let tc = TrainConfig { max_epochs: 3, ..Default::default() };
        train_target(&records, TargetKey::FiberG, &cfg, &tc, &featurizer, &provider).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = trained();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fiber.fcsm");
        save_model(&m, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.net.layers.iter().zip(&m.net.layers) {
            assert!(a.weights.iter().zip(&b.weights).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn truncation_and_bitflip_are_corrupt() {
        let bytes = encode_model(&trained()).unwrap();
        let p = Path::new("x.fcsm");
        for cut in [4, 20, bytes.len() - 1] {
            assert!(matches!(decode_model(&bytes[..cut], p), Err(Error::CorruptFile { .. })), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(decode_model(&flipped, p), Err(Error::CorruptFile { .. })));
    }

    #[test]
    fn version_bump_detected() {
        let bytes = encode_model(&trained()).unwrap();
        let m_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let json = std::str::from_utf8(&bytes[12..12 + m_len]).unwrap().replacen("\"format_version\":1", "\"format_version\":2", 1);
        let mut out = bytes[..8].to_vec();
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(json.as_bytes());
        out.extend_from_slice(&bytes[12 + m_len..]);
        assert!(matches!(decode_model(&out, Path::new("x")), Err(Error::VersionMismatch { found: 2, .. })));
    }

    #[test]
    fn bundle_round_trip_and_overlap() {
        let m = trained();
        let mut models = BTreeMap::new();
        models.insert(TargetKey::FiberG, m);
        let bundle = ModelBundle::new(models, &["Grilled  Chicken"]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bundle.save(dir.path()).unwrap();
        let back = ModelBundle::load(dir.path()).unwrap();
        assert_eq!(back, bundle);
        assert!(back.overlaps("grilled chicken"));
        assert!(!back.overlaps("grilled fish"));

        let file = dir.path().join("fiber_g.fcsm");
        let mut bytes = fs::read(&file).unwrap();
        bytes[20] ^= 0x20;
        fs::write(&file, bytes).unwrap();
        assert!(matches!(ModelBundle::load(dir.path()), Err(Error::CorruptFile { .. })));
    }

    #[test]
    fn missing_bundle_is_missing_model() {
        let dir = tempfile::tempdir().unwrap();
        let err = ModelBundle::load(&dir.path().join("nope")).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
