//! Tokenization shared by every text-facing stage.
//!
//! Text is lowercased and split on any character that is not alphanumeric.
//! Multi-word terms ("sugar-free", "no salt added") match when their tokens
//! occur contiguously in the text.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Whole-word, case-insensitive containment of `term` in pre-tokenized text.
pub fn contains_term(tokens: &[String], term: &str) -> bool {
    let needle = tokenize(term);
    if needle.is_empty() || needle.len() > tokens.len() {
        return false;
    }
    tokens.windows(needle.len()).any(|w| w == needle.as_slice())
}

pub fn contains_any(tokens: &[String], terms: &[String]) -> bool {
    terms.iter().any(|t| contains_term(tokens, t))
}

/// Parse a word list: one entry per line, `#` starts a comment.
pub fn parse_word_list(source: &str) -> BTreeSet<String> {
    source
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn load_word_list(path: &Path) -> Result<BTreeSet<String>> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&src))
}

pub const DEFAULT_STOP_WORDS: &str = include_str!("../data/stop_words.txt");
pub const DEFAULT_DENYLIST: &str = include_str!("../data/nonfood_denylist.txt");

pub fn default_stop_words() -> BTreeSet<String> {
    parse_word_list(DEFAULT_STOP_WORDS)
}

pub fn default_denylist() -> BTreeSet<String> {
    parse_word_list(DEFAULT_DENYLIST)
}
