//! Corpus augmentation: rewrite a sampled fraction of descriptions with one
//! of three transformations and adjust their targets with heuristic
//! multipliers.
//!
//! * synonym replacement ("chicken" → "poultry"), targets unchanged;
//! * cooking modifiers ("fried", "grilled"), prepended, with per-target
//!   multipliers;
//! * portion qualifiers ("large", "small"), prepended, scaling every amount
//!   target uniformly.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FoodRecord, NutrientProfile, Provenance, TargetKey};
use crate::text::{contains_any, contains_term, tokenize};

pub const DEFAULT_RULES: &str = include_str!("../data/augmentation.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Synonym {
    pub word: String,
    pub replacements: Vec<String>,
    /// The replacement only applies when one of these terms is present.
    #[serde(default)]
    pub requires_any: Vec<String>,
    /// The replacement never applies when one of these terms is present.
    #[serde(default)]
    pub forbids_any: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modifier {
    pub word: String,
    /// Multiplier for every amount target not listed in `multipliers`.
    #[serde(default)]
    pub uniform: Option<f64>,
    #[serde(default)]
    pub multipliers: BTreeMap<TargetKey, f64>,
    #[serde(default)]
    pub sets_fried: bool,
}

impl Modifier {
    pub fn multiplier(&self, key: TargetKey) -> f64 {
        if let Some(&m) = self.multipliers.get(&key) {
            return m;
        }
        match self.uniform {
            Some(u) if !key.is_categorical() => u,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationRules {
    #[serde(default = "default_fraction")]
    pub sample_fraction: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub synonym: Vec<Synonym>,
    #[serde(default)]
    pub cooking: Vec<Modifier>,
    #[serde(default)]
    pub portion: Vec<Modifier>,
}

fn default_fraction() -> f64 {
    0.30
}

impl Default for AugmentationRules {
    fn default() -> Self {
        Self::parse(DEFAULT_RULES).expect("embedded augmentation rules are valid")
    }
}

impl AugmentationRules {
    pub fn parse(src: &str) -> Result<Self> {
        let rules: AugmentationRules = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        rules.check()?;
        Ok(rules)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src).map_err(|e| Error::parse(path, e))
    }

    fn check(&self) -> Result<()> {
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::Config(format!("sample_fraction {} outside (0, 1]", self.sample_fraction)));
        }
        for m in self.cooking.iter().chain(&self.portion) {
            let bad = m.uniform.into_iter().chain(m.multipliers.values().copied()).find(|v| !(*v > 0.0));
            if let Some(v) = bad {
                return Err(Error::Config(format!("modifier `{}` has non-positive multiplier {v}", m.word)));
            }
        }
        for s in &self.synonym {
            if s.replacements.is_empty() {
                return Err(Error::Config(format!("synonym `{}` has no replacements", s.word)));
            }
        }
        Ok(())
    }

    fn modifier(&self, word: &str) -> Option<&Modifier> {
        self.cooking.iter().chain(&self.portion).find(|m| m.word.eq_ignore_ascii_case(word))
    }
}

/// `⌊fraction · n⌋` distinct indices in ascending order, reproducible per seed.
pub fn select_sample(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let k = ((fraction * n as f64).floor() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

/// Byte spans of alphanumeric words in `text`.
fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

fn match_case(original: &str, replacement: &str) -> String {
    if original.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = replacement.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    } else {
        replacement.to_string()
    }
}

struct SynonymSite<'a> {
    span: (usize, usize),
    rule: &'a Synonym,
}

fn synonym_sites<'a>(description: &str, rules: &'a AugmentationRules) -> Vec<SynonymSite<'a>> {
    let tokens = tokenize(description);
    word_spans(description)
        .into_iter()
        .filter_map(|span| {
            let word = description[span.0..span.1].to_lowercase();
            rules
                .synonym
                .iter()
                .find(|s| s.word == word)
                .filter(|s| s.requires_any.is_empty() || contains_any(&tokens, &s.requires_any))
                .filter(|s| !contains_any(&tokens, &s.forbids_any))
                .map(|rule| SynonymSite { span, rule })
        })
        .collect()
}

/// Replace at most one keyword occurrence, chosen uniformly among all
/// matches, with a uniformly chosen replacement.
pub fn synonym_replace<R: Rng>(description: &str, rules: &AugmentationRules, rng: &mut R) -> String {
    let sites = synonym_sites(description, rules);
    let Some(site) = sites.choose(rng) else {
        return description.to_string();
    };
    let replacement = site.rule.replacements.choose(rng).expect("checked non-empty");
    let (s, e) = site.span;
    format!("{}{}{}", &description[..s], match_case(&description[s..e], replacement), &description[e..])
}

/// Prepend `modifier` and scale the profile by its multipliers.
pub fn add_modifier(
    description: &str,
    modifier: &str,
    profile: &NutrientProfile,
    rules: &AugmentationRules,
) -> Result<(String, NutrientProfile)> {
    let m = rules.modifier(modifier).ok_or_else(|| Error::UnknownModifier(modifier.to_string()))?;
    if contains_term(&tokenize(description), &m.word) {
        return Err(Error::ModifierAlreadyPresent(m.word.clone()));
    }
    let mut out = profile.clone();
    for (&key, v) in out.values.iter_mut() {
        *v *= m.multiplier(key);
    }
    if m.sets_fried {
        out.set(TargetKey::FriedFlag, 1.0);
    }
    Ok((format!("{} {}", m.word, description.trim()), out))
}

#[derive(Clone, Copy)]
enum Mechanism {
    Synonym,
    Cooking,
    Portion,
}

fn absent<'a>(mods: &'a [Modifier], tokens: &[String]) -> Vec<&'a Modifier> {
    mods.iter().filter(|m| !contains_term(tokens, &m.word)).collect()
}

fn make_variant(record: &FoodRecord, source_index: usize, rules: &AugmentationRules, rng: &mut ChaCha8Rng) -> FoodRecord {
    let tokens = tokenize(&record.description);
    let cooking = absent(&rules.cooking, &tokens);
    let portion = absent(&rules.portion, &tokens);
    let mut options = Vec::with_capacity(3);
    if !synonym_sites(&record.description, rules).is_empty() {
        options.push(Mechanism::Synonym);
    }
    if !cooking.is_empty() {
        options.push(Mechanism::Cooking);
    }
    if !portion.is_empty() {
        options.push(Mechanism::Portion);
    }

    let mut variant = record.clone();
    variant.food_code = format!("{}~aug", record.food_code);
    variant.published_fcs = None;
    let transform = match options.choose(rng) {
        Some(Mechanism::Synonym) => {
            variant.description = synonym_replace(&record.description, rules, rng);
            "synonym".to_string()
        }
        Some(mech @ (Mechanism::Cooking | Mechanism::Portion)) => {
            let (pool, label) = match mech {
                Mechanism::Cooking => (&cooking, "cooking"),
                _ => (&portion, "portion"),
            };
            let m = pool.choose(rng).expect("non-empty pool");
            let (desc, profile) = add_modifier(&record.description, &m.word, &record.profile, rules)
                .expect("modifier is known and absent");
            variant.description = desc;
            variant.profile = profile;
            format!("{label}:{}", m.word)
        }
        None => "identity".to_string(),
    };
    variant.augmented = Some(Provenance { source_index, transform });
    variant
}

/// Originals followed by one variant per sampled record. Each record uses
/// its own RNG stream derived from `seed`, so variants do not depend on
/// each other.
pub fn augment_dataset(records: &[FoodRecord], rules: &AugmentationRules, seed: u64) -> Vec<FoodRecord> {
    let sample = select_sample(records.len(), rules.sample_fraction, seed);
    let mut out = records.to_vec();
    out.reserve(sample.len());
    for i in sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        out.push(make_variant(&records[i], i, rules, &mut rng));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Basis;

    fn rec(i: usize, desc: &str) -> FoodRecord {
        let mut p = NutrientProfile::zeros(Basis::Per100kcal);
        for (j, k) in TargetKey::ALL.iter().enumerate() {
            p.set(*k, 1.0 + (i * 7 + j) as f64 % 13.0);
        }
        p.set(TargetKey::NovaClass, 2.0);
        p.set(TargetKey::FriedFlag, 0.0);
        FoodRecord::new(format!("{i}"), desc, p)
    }

    fn corpus(n: usize) -> Vec<FoodRecord> {
        let foods = ["chicken soup", "beef stew", "apple", "white rice", "fish sticks", "green beans"];
        (0..n).map(|i| rec(i, foods[i % foods.len()])).collect()
    }

    #[test]
    fn default_rules_load() {
        let r = AugmentationRules::default();
        assert_eq!(r.sample_fraction, 0.30);
        let fried = r.modifier("fried").unwrap();
        assert_eq!(fried.multiplier(TargetKey::Calories), 1.5);
        assert_eq!(r.modifier("large").unwrap().multiplier(TargetKey::SodiumMg), 1.25);
        assert_eq!(r.modifier("large").unwrap().multiplier(TargetKey::NovaClass), 1.0);
    }

    #[test]
    fn rejects_bad_rules() {
        assert!(AugmentationRules::parse("sample_fraction = 0.0").is_err());
        assert!(AugmentationRules::parse("[[cooking]]\nword = \"x\"\nuniform = -1.0").is_err());
    }

    #[test]
    fn sample_sizes() {
        assert_eq!(select_sample(100, 0.30, 1).len(), 30);
        assert_eq!(select_sample(100, 1.0, 1), (0..100).collect::<Vec<_>>());
        assert_eq!(select_sample(100, 0.30, 9), select_sample(100, 0.30, 9));
        let s = select_sample(100, 0.3, 4);
        let mut d = s.clone();
        d.dedup();
        assert_eq!(d.len(), s.len());
    }

    #[test]
    fn synonym_examples() {
        let rules = AugmentationRules::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(synonym_replace("chicken soup", &rules, &mut rng), "poultry soup");
        assert_eq!(synonym_replace("Chicken soup", &rules, &mut rng), "Poultry soup");
        assert_eq!(synonym_replace("plain yogurt", &rules, &mut rng), "plain yogurt");
    }

    #[test]
    fn synonym_replaces_exactly_one_occurrence() {
        let rules = AugmentationRules::default();
        let src = "chicken with chicken broth";
        let mut first = 0;
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = synonym_replace(src, &rules, &mut rng);
            let toks = tokenize(&out);
            assert_eq!(toks.iter().filter(|t| *t == "chicken").count(), 1, "{out}");
            if toks[0] != "chicken" {
                first += 1;
            }
        }
        // both sites get picked
        assert!(first > 300 && first < 700, "{first}");
    }

    #[test]
    fn fried_modifier_example() {
        let rules = AugmentationRules::default();
        let p = NutrientProfile::with_values(Basis::Per100kcal, [(TargetKey::Calories, 200.0), (TargetKey::FriedFlag, 0.0)]);
        let (d, q) = add_modifier("chicken", "fried", &p, &rules).unwrap();
        assert_eq!(d, "fried chicken");
        assert_eq!(q.get(TargetKey::Calories), Some(300.0));
        assert_eq!(q.get(TargetKey::FriedFlag), Some(1.0));
        assert!(matches!(add_modifier("fried fish", "fried", &p, &rules), Err(Error::ModifierAlreadyPresent(_))));
    }

    #[test]
    fn identity_modifier_leaves_profile() {
        let rules = AugmentationRules::default();
        let p = rec(3, "x").profile;
        let (_, q) = add_modifier("beef", "grilled", &p, &rules).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn dataset_sizes_and_provenance() {
        let rules = AugmentationRules::default();
        let input = corpus(100);
        let out = augment_dataset(&input, &rules, 5);
        assert_eq!(out.len(), 130);
        assert_eq!(&out[..100], &input[..]);
        assert!(out[100..].iter().all(|r| r.augmented.is_some()));

        let tiny = AugmentationRules { sample_fraction: 0.005, ..rules.clone() };
        assert_eq!(augment_dataset(&input, &tiny, 5).len(), 100);
    }

    #[test]
    fn ratios_match_multipliers() {
        let rules = AugmentationRules::default();
        let input = corpus(60);
        let out = augment_dataset(&input, &rules, 11);
        for v in &out[60..] {
            let prov = v.augmented.as_ref().unwrap();
            let src = &input[prov.source_index];
            let word = prov.transform.split(':').nth(1);
            for (&k, &val) in &v.profile.values {
                let base = src.profile.values[&k];
                let m = match word {
                    Some(w) => rules.modifier(w).unwrap(),
                    None => {
                        assert_eq!(val, base);
                        continue;
                    }
                };
                if k == TargetKey::FriedFlag && m.sets_fried {
                    assert_eq!(val, 1.0);
                } else {
                    assert_eq!(val, base * m.multiplier(k), "{k} via {}", prov.transform);
                }
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let rules = AugmentationRules::default();
        let input = corpus(40);
        assert_eq!(augment_dataset(&input, &rules, 3), augment_dataset(&input, &rules, 3));
    }
}
