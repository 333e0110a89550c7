//! Sentence embedding providers.
//!
//! A file provider serves vectors precomputed by an external sentence
//! encoder; the hashed provider is a self-contained fallback built from
//! signed feature hashing of character n-grams.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_EMBEDDING_DIM: usize = 384;

pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

/// Identifies the embedding source a model was trained against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub dimension: usize,
    /// SHA-256 of the embedding file, when one backs the provider.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_sha256: Option<String>,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Signed feature hashing of character 3-, 4- and 5-grams.
///
/// The text is trimmed and lowercased. Each n-gram's UTF-8 bytes are hashed
/// with FNV-1a 64; the bucket is `hash % dimension` and bit 63 selects the
/// sign (set → −1). Texts shorter than three characters hash as a single
/// gram. The result is L2-normalized; empty text maps to the zero vector.
#[derive(Debug, Clone)]
pub struct HashedEmbedding {
    dimension: usize,
}

impl HashedEmbedding {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(HashedEmbedding { dimension })
    }

    pub fn spec(&self) -> EmbeddingSpec {
        EmbeddingSpec { dimension: self.dimension, file_sha256: None }
    }

    fn accumulate(&self, gram: &str, out: &mut [f64]) {
        let h = fnv1a64(gram.as_bytes());
        let bucket = (h % self.dimension as u64) as usize;
        out[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
    }
}

impl EmbeddingProvider for HashedEmbedding {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let lowered = text.trim().to_lowercase();
        let chars: Vec<char> = lowered.chars().collect();
        let mut out = vec![0.0; self.dimension];
        if chars.is_empty() {
            return Ok(out);
        }
        if chars.len() < 3 {
            self.accumulate(&lowered, &mut out);
        }
        let mut gram = String::new();
        for n in 3..=5 {
            for w in chars.windows(n) {
                gram.clear();
                gram.extend(w);
                self.accumulate(&gram, &mut out);
            }
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(out)
    }
}

/// Vectors loaded from a UTF-8 TSV: the text, then `dimension` reals.
#[derive(Debug, Clone)]
pub struct FileEmbedding {
    dimension: usize,
    table: HashMap<String, Vec<f64>>,
    sha256: String,
}

impl FileEmbedding {
    pub fn load(path: &Path, dimension: usize) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let sha256 = hex::encode(Sha256::digest(&bytes));
        let content = String::from_utf8(bytes).map_err(|e| Error::parse(path, e))?;
        let bad = |line: usize, msg: String| Error::BadEmbeddingFile { path: path.to_path_buf(), line, msg };

        let mut table = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let text = fields.next().unwrap_or("").trim().to_string();
            let values = fields
                .map(|f| f.trim().parse::<f64>().map_err(|e| bad(i + 1, format!("bad number {f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != dimension {
                return Err(bad(i + 1, format!("bad dimension: {} values, expected {dimension}", values.len())));
            }
            table.insert(text, values);
        }
        Ok(FileEmbedding { dimension, table, sha256 })
    }

    pub fn spec(&self) -> EmbeddingSpec {
        EmbeddingSpec { dimension: self.dimension, file_sha256: Some(self.sha256.clone()) }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl EmbeddingProvider for FileEmbedding {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        self.table.get(text.trim()).cloned().ok_or_else(|| Error::UnknownText(text.to_string()))
    }
}

/// File lookup with a per-text fallback to hashing. Counts fallbacks.
pub struct FallbackEmbedding {
    file: Option<FileEmbedding>,
    hashed: HashedEmbedding,
    fallbacks: AtomicUsize,
}

impl FallbackEmbedding {
    pub fn new(file: Option<FileEmbedding>, dimension: usize) -> Result<Self> {
        if let Some(f) = &file {
            if f.dimension != dimension {
                return Err(Error::DimensionMismatch { what: "embedding file", expected: dimension, got: f.dimension });
            }
        }
        Ok(FallbackEmbedding { file, hashed: HashedEmbedding::new(dimension)?, fallbacks: AtomicUsize::new(0) })
    }

    pub fn hashed_only(dimension: usize) -> Result<Self> {
        Self::new(None, dimension)
    }

    pub fn spec(&self) -> EmbeddingSpec {
        self.file.as_ref().map_or_else(|| self.hashed.spec(), FileEmbedding::spec)
    }

    pub fn fallback_count(&self) -> usize {
        self.fallbacks.load(Ordering::Relaxed)
    }
}

impl EmbeddingProvider for FallbackEmbedding {
    fn dimension(&self) -> usize {
        self.hashed.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        if let Some(file) = &self.file {
            match file.embed(text) {
                Ok(v) => return Ok(v),
                Err(Error::UnknownText(_)) => {
                    self.fallbacks.fetch_add(1, Ordering::Relaxed);
                }
                Err(e) => return Err(e),
            }
        }
        self.hashed.embed(text)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
