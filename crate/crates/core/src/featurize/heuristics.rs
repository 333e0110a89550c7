//! Keyword heuristics appended to the hybrid vector.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TargetGroup, TargetKey};
use crate::text::{contains_any, contains_term, tokenize};

pub const DEFAULT_HEURISTICS: &str = include_str!("../../data/heuristics.toml");

pub const MIN_FEATURES: usize = 15;
pub const MAX_FEATURES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CookingTerm {
    pub term: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicConfig {
    pub version: u32,
    pub cooking: Vec<CookingTerm>,
    pub flags: BTreeMap<String, Vec<String>>,
    pub groups: BTreeMap<TargetGroup, Vec<String>>,
    #[serde(default)]
    pub targets: BTreeMap<TargetKey, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub terms: Vec<String>,
}

/// The resolved, ordered feature list for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicSpec {
    pub version: u32,
    pub cooking: Vec<CookingTerm>,
    pub flags: Vec<Flag>,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_HEURISTICS).expect("embedded heuristics are valid")
    }
}

impl HeuristicConfig {
    pub fn parse(src: &str) -> Result<Self> {
        let cfg: HeuristicConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        for &t in TargetKey::ALL {
            if cfg.flag_names(t).is_some() {
                cfg.spec_for(t)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src).map_err(|e| Error::parse(path, e))
    }

    fn flag_names(&self, target: TargetKey) -> Option<&Vec<String>> {
        self.targets.get(&target).or_else(|| self.groups.get(&target.group()))
    }

    pub fn spec_for(&self, target: TargetKey) -> Result<HeuristicSpec> {
        let names = self.flag_names(target).ok_or_else(|| Error::UnknownTarget(target.name().to_string()))?;
        let flags = names
            .iter()
            .map(|n| {
                let terms = self.flags.get(n).ok_or_else(|| Error::Config(format!("unknown heuristic flag `{n}`")))?;
                Ok(Flag { name: n.clone(), terms: terms.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = HeuristicSpec { version: self.version, cooking: self.cooking.clone(), flags };
        let n = spec.len();
        if !(MIN_FEATURES..=MAX_FEATURES).contains(&n) {
            return Err(Error::Config(format!("{target}: {n} heuristic features, expected {MIN_FEATURES}..={MAX_FEATURES}")));
        }
        Ok(spec)
    }
}

impl HeuristicSpec {
    pub fn len(&self) -> usize {
        self.flags.len() + 3
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn feature_names(&self) -> Vec<String> {
        std::iter::once("cooking_method".to_string())
            .chain(self.flags.iter().map(|f| format!("flag_{}", f.name)))
            .chain(["word_count".to_string(), "char_count".to_string()])
            .collect()
    }

    /// Cooking indicator, flags, word count, character count.
    pub fn features(&self, text: &str) -> Vec<f64> {
        let tokens = tokenize(text);
        let mut out = Vec::with_capacity(self.len());
        let cooking = self.cooking.iter().find(|c| contains_term(&tokens, &c.term)).map_or(0.0, |c| c.value);
        out.push(cooking);
        out.extend(self.flags.iter().map(|f| if contains_any(&tokens, &f.terms) { 1.0 } else { 0.0 }));
        let trimmed = text.trim();
        out.push(trimmed.split_whitespace().count() as f64);
        out.push(trimmed.chars().count() as f64);
        out
    }
}

pub fn heuristic_features(config: &HeuristicConfig, target: TargetKey, text: &str) -> Result<Vec<f64>> {
    Ok(config.spec_for(target)?.features(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_eighteen_features_everywhere() {
        let cfg = HeuristicConfig::default();
        for &t in TargetKey::ALL {
            assert_eq!(cfg.spec_for(t).unwrap().len(), 18, "{t}");
        }
    }

    #[test]
    fn fried_indicator() {
        let cfg = HeuristicConfig::default();
        let f = heuristic_features(&cfg, TargetKey::Calories, "fried chicken").unwrap();
        assert_eq!(f[0], 1.5);
        let f = heuristic_features(&cfg, TargetKey::Calories, "deep fried fish").unwrap();
        assert_eq!(f[0], 1.6);
    }

    #[test]
    fn sugar_free_flag() {
        let cfg = HeuristicConfig::default();
        let spec = cfg.spec_for(TargetKey::AddedSugarG).unwrap();
        let names = spec.feature_names();
        let idx = names.iter().position(|n| n == "flag_sugar_free").unwrap();
        assert_eq!(spec.features("sugar-free gelatin")[idx], 1.0);
        assert_eq!(spec.features("gelatin")[idx], 0.0);
    }

    #[test]
    fn text_stats() {
        let spec = HeuristicConfig::default().spec_for(TargetKey::IronMg).unwrap();
        let f = spec.features("a");
        assert_eq!(&f[f.len() - 2..], &[1.0, 1.0]);
    }

    #[test]
    fn unknown_target_when_no_group() {
        let mut cfg = HeuristicConfig::default();
        cfg.groups.remove(&TargetGroup::Mineral);
        assert!(matches!(heuristic_features(&cfg, TargetKey::IronMg, "x"), Err(Error::UnknownTarget(_))));
    }

    #[test]
    fn feature_count_bounds_enforced() {
        let src = DEFAULT_HEURISTICS.replace("[targets]", "[targets]\niron_mg = [\"fortified\"]");
        assert!(HeuristicConfig::parse(&src).is_err());
    }
}
