//! TF-IDF over unigrams and bigrams.
//!
//! Terms are formed after stop-word removal, so a bigram joins the two
//! surviving neighbours. The vocabulary keeps the `max_features` terms with
//! the highest document frequency (ties lexicographic) and assigns columns
//! in lexicographic order. `idf(t) = ln((1 + N) / (1 + df(t))) + 1`; the
//! transformed vector is raw counts times idf, L2-normalized.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

pub const DEFAULT_MAX_FEATURES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub n_docs: usize,
    pub max_features: usize,
    pub stop_words: BTreeSet<String>,
}

/// Unigrams followed by bigrams of `text`, stop words removed.
pub fn terms(text: &str, stop_words: &BTreeSet<String>) -> Vec<String> {
    let words: Vec<String> = tokenize(text).into_iter().filter(|t| !stop_words.contains(t)).collect();
    let bigrams: Vec<String> = words.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect();
    words.into_iter().chain(bigrams).collect()
}

pub fn fit_tfidf<S: AsRef<str>>(corpus: &[S], max_features: usize, stop_words: &BTreeSet<String>) -> Result<TfidfModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: BTreeSet<String> = terms(doc.as_ref(), stop_words).into_iter().collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
    // BTreeMap order is lexicographic, and the sort is stable.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    ranked.truncate(max_features);
    ranked.sort_by(|a, b| a.0.cmp(&b.0));

    let n = corpus.len();
    let idf = ranked.iter().map(|(_, d)| ((1.0 + n as f64) / (1.0 + *d as f64)).ln() + 1.0).collect();
    let vocabulary = ranked.into_iter().enumerate().map(|(i, (t, _))| (t, i)).collect();
    Ok(TfidfModel { vocabulary, idf, n_docs: n, max_features, stop_words: stop_words.clone() })
}

impl TfidfModel {
    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn transform(&self, text: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.vocabulary.len()];
        for t in terms(text, &self.stop_words) {
            if let Some(&col) = self.vocabulary.get(&t) {
                out[col] += 1.0;
            }
        }
        for (v, idf) in out.iter_mut().zip(&self.idf) {
            *v *= idf;
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|v| *v /= norm);
        }
        out
    }
}
