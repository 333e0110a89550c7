//! Hybrid feature vectors: `[embedding | tf-idf | heuristics]`.

pub mod embedding;
pub mod heuristics;
pub mod scaler;
pub mod tfidf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use embedding::{EmbeddingProvider, EmbeddingSpec, FallbackEmbedding, FileEmbedding, HashedEmbedding};
pub use heuristics::{heuristic_features, HeuristicConfig, HeuristicSpec};
pub use scaler::ScalerParams;
pub use tfidf::{fit_tfidf, TfidfModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLayout {
    pub embedding: usize,
    pub tfidf: usize,
    pub heuristics: usize,
}

impl SegmentLayout {
    pub fn total(&self) -> usize {
        self.embedding + self.tfidf + self.heuristics
    }

    /// Start offsets of the three segments.
    pub fn offsets(&self) -> [usize; 3] {
        [0, self.embedding, self.embedding + self.tfidf]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridVector {
    pub values: Vec<f64>,
    pub offsets: [usize; 3],
}

pub fn assemble_hybrid(embedding: &[f64], tfidf: &[f64], heuristics: &[f64], layout: &SegmentLayout) -> Result<HybridVector> {
    let check = |what, expected, got: usize| {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { what, expected, got })
        }
    };
    check("embedding segment", layout.embedding, embedding.len())?;
    check("tf-idf segment", layout.tfidf, tfidf.len())?;
    check("heuristic segment", layout.heuristics, heuristics.len())?;
    let mut values = Vec::with_capacity(layout.total());
    values.extend_from_slice(embedding);
    values.extend_from_slice(tfidf);
    values.extend_from_slice(heuristics);
    Ok(HybridVector { values, offsets: layout.offsets() })
}

/// Everything needed to rebuild a target's input vector from text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizerState {
    pub embedding: EmbeddingSpec,
    pub tfidf: TfidfModel,
    pub heuristics: HeuristicSpec,
}

impl FeaturizerState {
    pub fn layout(&self) -> SegmentLayout {
        SegmentLayout { embedding: self.embedding.dimension, tfidf: self.tfidf.len(), heuristics: self.heuristics.len() }
    }

    /// SHA-256 over the canonical JSON encoding of the state.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("featurizer state serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn featurize(&self, provider: &dyn EmbeddingProvider, text: &str) -> Result<HybridVector> {
        if provider.dimension() != self.embedding.dimension {
            return Err(Error::DimensionMismatch {
                what: "embedding provider",
                expected: self.embedding.dimension,
                got: provider.dimension(),
            });
        }
        let emb = provider.embed(text)?;
        self.featurize_with(&emb, text)
    }

    /// Featurize with a precomputed embedding.
    pub fn featurize_with(&self, embedding: &[f64], text: &str) -> Result<HybridVector> {
        assemble_hybrid(embedding, &self.tfidf.transform(text), &self.heuristics.features(text), &self.layout())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TargetKey;
    use crate::text::default_stop_words;

    #[test]
    fn layout_arithmetic() {
        let layout = SegmentLayout { embedding: 384, tfidf: 1024, heuristics: 18 };
        let v = assemble_hybrid(&[0.0; 384], &[0.0; 1024], &[0.0; 18], &layout).unwrap();
        assert_eq!(v.values.len(), 1426);
        assert_eq!(v.offsets, [0, 384, 1408]);
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wrong_segment_length() {
        let layout = SegmentLayout { embedding: 4, tfidf: 3, heuristics: 2 };
        let err = assemble_hybrid(&[0.0; 4], &[0.0; 2], &[0.0; 2], &layout).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { what: "tf-idf segment", .. }));
    }

    #[test]
    fn featurization_is_pure() {
        let tfidf = fit_tfidf(&["grilled chicken", "apple pie", "chicken soup"], 1024, &default_stop_words()).unwrap();
        let provider = HashedEmbedding::new(32).unwrap();
        let state = FeaturizerState {
            embedding: provider.spec(),
            tfidf,
            heuristics: HeuristicConfig::default().spec_for(TargetKey::ProteinG).unwrap(),
        };
        let a = state.featurize(&provider, "fried chicken soup").unwrap();
        let b = state.featurize(&provider, "fried chicken soup").unwrap();
        assert_eq!(a, b);
        let l = state.layout();
        assert_eq!(a.values.len(), l.total());
        assert_eq!(a.offsets[2] + l.heuristics, l.total());
        assert_eq!(state.fingerprint(), state.clone().fingerprint());

        let other = HashedEmbedding::new(16).unwrap();
        assert!(state.featurize(&other, "x").is_err());
    }
}
