//! Food Compass scoring over a per-100-kcal profile.
//!
//! Nine domain scores are summed, clipped and mapped onto 1–100. Every
//! function here is pure over `(profile, description, config)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Basis, NutrientProfile, TargetKey};
use crate::text::{contains_any, tokenize};

pub const DEFAULT_SCORING: &str = include_str!("../data/scoring.toml");

/// Clip constants given in the prose rather than the final formula.
pub const PROSE_CLIP: (f64, f64) = (-12.80, 29.42);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ascending,
    Descending,
}

/// One scaling row: clip `v` to `[l, h]`, then map linearly onto the points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeParams {
    #[serde(default)]
    pub label: String,
    pub l: f64,
    pub h: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Defaults to descending for (−10, 0) rows, ascending otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

impl AttributeParams {
    pub fn new(l: f64, h: f64, p_min: f64, p_max: f64) -> Self {
        AttributeParams { label: String::new(), l, h, p_min, p_max, direction: None }
    }

    pub fn direction(&self) -> Direction {
        self.direction.unwrap_or(if self.p_min < 0.0 && self.p_max == 0.0 { Direction::Descending } else { Direction::Ascending })
    }

    fn check(&self) -> Result<()> {
        if !(self.h > self.l) || !self.p_min.is_finite() || !self.p_max.is_finite() {
            return Err(Error::Config(format!("scoring row `{}` needs h > l and finite points", self.label)));
        }
        Ok(())
    }
}

/// A table row scored from the sum of one or more targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub label: String,
    pub keys: Vec<TargetKey>,
    pub l: f64,
    pub h: f64,
    pub p_min: f64,
    pub p_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl TableRow {
    pub fn params(&self) -> AttributeParams {
        AttributeParams { label: self.label.clone(), l: self.l, h: self.h, p_min: self.p_min, p_max: self.p_max, direction: self.direction }
    }

    fn input(&self, profile: &NutrientProfile) -> Result<f64> {
        self.keys.iter().map(|&k| profile.require(k)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDirection {
    /// applicable when the quantity is at or above the threshold
    AtLeast,
    /// applicable when below it (the printed wording)
    Below,
}

impl GateDirection {
    fn open(self, value: f64, threshold: f64) -> bool {
        match self {
            GateDirection::AtLeast => value >= threshold,
            GateDirection::Below => value < threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnaGate {
    /// K ≥ threshold
    Potassium,
    /// K ≥ threshold and Na ≥ threshold
    Both,
    /// K ≥ threshold or Na ≥ threshold
    Either,
    /// K < threshold and Na < threshold
    BothBelow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gates {
    pub fat: GateDirection,
    pub carb: GateDirection,
    pub k_na: KnaGate,
    pub fat_energy_pct: f64,
    pub carb_energy_pct: f64,
    pub potassium_mg: f64,
    pub sodium_mg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ratios {
    pub fat: AttributeParams,
    pub carb: AttributeParams,
    pub k_na: AttributeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Additives {
    pub sugar: AttributeParams,
    pub nitrite: AttributeParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sugar_breakpoints: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberProtein {
    pub fiber: AttributeParams,
    pub protein: AttributeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phytochemicals {
    pub flavonoids: AttributeParams,
    pub carotenoids: AttributeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keywords {
    pub dairy: Vec<String>,
    pub fermentation: Vec<String>,
    pub frying: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringConfig {
    pub low_clip: f64,
    pub high_clip: f64,
    pub span: f64,
    pub epsilon: f64,
    pub literal_formula_mode: bool,
    pub d1_aggregation: Aggregation,
    pub atwater_carb: f64,
    pub atwater_sugar: f64,
    pub atwater_fat: f64,
    pub cured_meat_kcal_per_oz_eq: f64,
    pub nova_anchors: Vec<[f64; 2]>,
    pub gates: Gates,
    pub ratios: Ratios,
    pub vitamins: Vec<TableRow>,
    pub minerals: Vec<TableRow>,
    pub ingredients: Vec<TableRow>,
    pub lipids: Vec<TableRow>,
    pub additives: Additives,
    pub fiber_protein: FiberProtein,
    pub phytochemicals: Phytochemicals,
    pub keywords: Keywords,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self::parse(DEFAULT_SCORING).expect("embedded scoring tables are valid")
    }
}

impl ScoringConfig {
    pub fn parse(src: &str) -> Result<Self> {
        let cfg: ScoringConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src).map_err(|e| Error::parse(path, e))
    }

    /// Switch to the prose clip range (−12.80, 29.42).
    pub fn with_prose_clip(mut self) -> Self {
        self.low_clip = PROSE_CLIP.0;
        self.high_clip = PROSE_CLIP.1;
        self.span = PROSE_CLIP.1 - PROSE_CLIP.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if ((self.high_clip - self.low_clip) - self.span).abs() > 1e-9 {
            return Err(Error::Config(format!("span {} does not equal high_clip − low_clip", self.span)));
        }
        let a = &self.nova_anchors;
        if a.len() < 2 || a.windows(2).any(|w| !(w[1][0] > w[0][0]) || !(w[1][1] < w[0][1])) {
            return Err(Error::Config("NOVA anchors must be increasing in class and strictly decreasing in score".into()));
        }
        for (name, rows, n) in [("vitamins", &self.vitamins, 12), ("minerals", &self.minerals, 9), ("ingredients", &self.ingredients, 10), ("lipids", &self.lipids, 4)] {
            if rows.len() != n {
                return Err(Error::Config(format!("{name} table has {} rows, expected {n}", rows.len())));
            }
            for r in rows {
                if r.keys.is_empty() {
                    return Err(Error::Config(format!("row `{}` has no keys", r.label)));
                }
                r.params().check()?;
            }
        }
        if self.lipids.iter().any(|r| !r.weight.is_some_and(|w| w > 0.0)) {
            return Err(Error::Config("every lipid row needs a positive weight".into()));
        }
        let singles = [
            &self.ratios.fat,
            &self.ratios.carb,
            &self.ratios.k_na,
            &self.additives.sugar,
            &self.additives.nitrite,
            &self.fiber_protein.fiber,
            &self.fiber_protein.protein,
            &self.phytochemicals.flavonoids,
            &self.phytochemicals.carotenoids,
        ];
        for p in singles {
            p.check()?;
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Every target the scorer reads, in registry order.
    pub fn required_targets(&self) -> Vec<TargetKey> {
        use TargetKey::*;
        let mut keys: Vec<TargetKey> = vec![
            SaturatedFatG, UnsaturatedFatG, FiberG, CarbohydrateG, PotassiumMg, SodiumMg, AddedSugarG, CuredMeat,
            NovaClass, FermentedPct, FriedFlag, ProteinG, FlavonoidsMg, CarotenoidsMcg,
        ];
        for rows in [&self.vitamins, &self.minerals, &self.ingredients, &self.lipids] {
            keys.extend(rows.iter().flat_map(|r| r.keys.iter().copied()));
        }
        keys.sort();
        keys.dedup();
        keys
    }
}

/// The scaling function. Descending rows run from `p_max` at `l` to `p_min`
/// at `h`, unless `literal` asks for the printed formula on every row.
pub fn scale_score(v: f64, p: &AttributeParams, literal: bool) -> f64 {
    let frac = (v.clamp(p.l, p.h) - p.l) / (p.h - p.l);
    match (p.direction(), literal) {
        (Direction::Descending, false) => p.p_max + (p.p_min - p.p_max) * frac,
        _ => p.p_min + (p.p_max - p.p_min) * frac,
    }
}

/// Piecewise-linear interpolation through `(x, y)` points, flat outside.
pub fn interpolate(x: f64, points: &[[f64; 2]]) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first[0] {
        return first[1];
    }
    if x >= last[0] {
        return last[1];
    }
    for w in points.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    last[1]
}

pub fn nova_interpolate(nova: f64, anchors: &[[f64; 2]]) -> f64 {
    interpolate(nova, anchors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubScore {
    pub name: String,
    pub input: f64,
    pub score: f64,
    /// Whether the score entered the domain total (gates, top-k selection).
    pub used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl SubScore {
    fn new(name: &str, input: f64, score: f64) -> Self {
        SubScore { name: name.to_string(), input, score, used: true, weight: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainAudit {
    pub domain: String,
    pub score: f64,
    pub items: Vec<SubScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcsBreakdown {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    pub d6: f64,
    pub d7: f64,
    pub d8: f64,
    pub d9: f64,
    pub raw_sum: f64,
    pub clipped_sum: f64,
    pub final_score: u8,
    pub audit: Vec<DomainAudit>,
}

impl FcsBreakdown {
    pub fn domains(&self) -> [f64; 9] {
        [self.d1, self.d2, self.d3, self.d4, self.d5, self.d6, self.d7, self.d8, self.d9]
    }
}

type Domain = (f64, Vec<SubScore>);

fn log_ratio(num: f64, den: f64, eps: f64) -> f64 {
    (num.max(eps) / den.max(eps)).ln()
}

pub fn score_nutrient_ratios(profile: &NutrientProfile, description: &str, cfg: &ScoringConfig) -> Result<Domain> {
    let g = &cfg.gates;
    let lit = cfg.literal_formula_mode;
    let sat = profile.require(TargetKey::SaturatedFatG)?;
    let unsat = profile.require(TargetKey::UnsaturatedFatG)?;
    let fiber = profile.require(TargetKey::FiberG)?;
    let carb = profile.require(TargetKey::CarbohydrateG)?;
    let k = profile.require(TargetKey::PotassiumMg)?;
    let na = profile.require(TargetKey::SodiumMg)?;

    let mut items = Vec::with_capacity(3);

    let r = log_ratio(unsat, sat, cfg.epsilon);
    let mut s = scale_score(r, &cfg.ratios.fat, lit);
    if contains_any(&tokenize(description), &cfg.keywords.dairy) {
        s *= 0.5;
    }
    let mut fat = SubScore::new("fat", r, s);
    fat.used = g.fat.open(cfg.atwater_fat * (sat + unsat), g.fat_energy_pct);
    items.push(fat);

    let r = log_ratio(fiber, carb, cfg.epsilon);
    let mut c = SubScore::new("carb", r, scale_score(r, &cfg.ratios.carb, lit));
    c.used = g.carb.open(cfg.atwater_carb * carb, g.carb_energy_pct);
    items.push(c);

    let r = log_ratio(k, na, cfg.epsilon);
    let mut kn = SubScore::new("k_na", r, scale_score(r, &cfg.ratios.k_na, lit));
    let (k_on, na_on) = (k >= g.potassium_mg, na >= g.sodium_mg);
    kn.used = match g.k_na {
        KnaGate::Potassium => k_on,
        KnaGate::Both => k_on && na_on,
        KnaGate::Either => k_on || na_on,
        KnaGate::BothBelow => !k_on && !na_on,
    };
    items.push(kn);

    let used: Vec<f64> = items.iter().filter(|i| i.used).map(|i| i.score).collect();
    let d1 = match (cfg.d1_aggregation, used.len()) {
        (_, 0) => 0.0,
        (Aggregation::Mean, n) => used.iter().sum::<f64>() / n as f64,
        (Aggregation::Sum, _) => used.iter().sum(),
    };
    Ok((d1, items))
}

/// Score each row, keep the `k` largest by absolute value (stable, so ties
/// go to the earlier row) and return the selection.
fn score_rows(profile: &NutrientProfile, rows: &[TableRow], k: usize, lit: bool) -> Result<Vec<SubScore>> {
    let mut items = rows
        .iter()
        .map(|r| {
            let v = r.input(profile)?;
            let mut s = SubScore::new(&r.label, v, scale_score(v, &r.params(), lit));
            s.weight = r.weight;
            s.used = false;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[b].score.abs().total_cmp(&items[a].score.abs()));
    for &i in order.iter().take(k) {
        items[i].used = true;
    }
    Ok(items)
}

fn top_mean(profile: &NutrientProfile, rows: &[TableRow], lit: bool) -> Result<Domain> {
    let items = score_rows(profile, rows, 5, lit)?;
    let used: Vec<f64> = items.iter().filter(|i| i.used).map(|i| i.score).collect();
    Ok((used.iter().sum::<f64>() / used.len() as f64, items))
}

pub fn score_vitamins(profile: &NutrientProfile, cfg: &ScoringConfig) -> Result<Domain> {
    top_mean(profile, &cfg.vitamins, cfg.literal_formula_mode)
}

pub fn score_minerals(profile: &NutrientProfile, cfg: &ScoringConfig) -> Result<Domain> {
    top_mean(profile, &cfg.minerals, cfg.literal_formula_mode)
}

pub fn score_ingredients(profile: &NutrientProfile, cfg: &ScoringConfig) -> Result<Domain> {
    let items = score_rows(profile, &cfg.ingredients, cfg.ingredients.len(), cfg.literal_formula_mode)?;
    Ok((items.iter().map(|i| i.score).sum(), items))
}

pub fn score_additives(profile: &NutrientProfile, cfg: &ScoringConfig) -> Result<Domain> {
    let lit = cfg.literal_formula_mode;
    let p_sugar = cfg.atwater_sugar * profile.require(TargetKey::AddedSugarG)?;
    let sugar = match &cfg.additives.sugar_breakpoints {
        Some(points) if !points.is_empty() => interpolate(p_sugar, points),
        _ => scale_score(p_sugar, &cfg.additives.sugar, lit),
    };
    let p_nitrite = (profile.require(TargetKey::CuredMeat)? * cfg.cured_meat_kcal_per_oz_eq).min(100.0);
    let nitrite = scale_score(p_nitrite, &cfg.additives.nitrite, lit);
    Ok(((sugar + nitrite) / 2.0, vec![SubScore::new("added_sugar", p_sugar, sugar), SubScore::new("nitrite", p_nitrite, nitrite)]))
}

pub fn score_processing(profile: &NutrientProfile, description: &str, cfg: &ScoringConfig) -> Result<Domain> {
    let nova = profile.require(TargetKey::NovaClass)?;
    let tokens = tokenize(description);
    let predicted = profile.require(TargetKey::FermentedPct)?;
    let fermented = if predicted > 50.0 || contains_any(&tokens, &cfg.keywords.fermentation) { 100.0 } else { predicted };
    let fried = profile.require(TargetKey::FriedFlag)? >= 0.5 || contains_any(&tokens, &cfg.keywords.frying);

    let s_nova = nova_interpolate(nova, &cfg.nova_anchors);
    let s_ferm = scale_score(fermented, &AttributeParams::new(0.0, 100.0, 0.0, 10.0), false);
    let s_fry = if fried { -10.0 } else { 0.0 };
    let d6 = (s_nova + 0.5 * s_ferm + 0.5 * s_fry) / 2.0;
    Ok((
        d6,
        vec![
            SubScore::new("nova", nova, s_nova),
            SubScore::new("fermentation", fermented, s_ferm),
            SubScore::new("frying", if fried { 1.0 } else { 0.0 }, s_fry),
        ],
    ))
}

pub fn score_lipids(profile: &NutrientProfile, cfg: &ScoringConfig) -> Result<Domain> {
    let items = score_rows(profile, &cfg.lipids, 3, cfg.literal_formula_mode)?;
    let (mut num, mut den) = (0.0, 0.0);
    for i in items.iter().filter(|i| i.used) {
        let w = i.weight.unwrap_or(1.0);
        num += w * i.score;
        den += w;
    }
    Ok((0.5 * num / den, items))
}

pub fn score_fiber_protein(profile: &NutrientProfile, cfg: &ScoringConfig) -> Result<Domain> {
    let fiber = profile.require(TargetKey::FiberG)?;
    let protein = profile.require(TargetKey::ProteinG)?;
    let sf = scale_score(fiber, &cfg.fiber_protein.fiber, cfg.literal_formula_mode);
    let sp = scale_score(protein, &cfg.fiber_protein.protein, cfg.literal_formula_mode);
    Ok(((sf + 0.5 * sp) / 1.5, vec![SubScore::new("fiber", fiber, sf), SubScore::new("protein", protein, sp)]))
}

pub fn score_phytochemicals(profile: &NutrientProfile, cfg: &ScoringConfig) -> Result<Domain> {
    let fl = profile.require(TargetKey::FlavonoidsMg)?;
    let ca = profile.require(TargetKey::CarotenoidsMcg)?;
    let sf = scale_score(fl, &cfg.phytochemicals.flavonoids, cfg.literal_formula_mode);
    let sc = scale_score(ca, &cfg.phytochemicals.carotenoids, cfg.literal_formula_mode);
    Ok((0.5 * (sf + sc) / 2.0, vec![SubScore::new("flavonoids", fl, sf), SubScore::new("carotenoids", ca, sc)]))
}

/// Round half away from zero. Values within 1e-9 of a .5 boundary count as
/// on it, so sums such as 8.755 that land a hair below 50.5 still go up.
pub fn round_half_away(x: f64) -> f64 {
    (x + x.signum() * 1e-9).round()
}

/// Clip the raw domain sum and map it to 1–100.
pub fn final_transform(raw_sum: f64, cfg: &ScoringConfig) -> (f64, u8) {
    let clipped = raw_sum.clamp(cfg.low_clip, cfg.high_clip);
    let x = 100.0 - 99.0 * (cfg.high_clip - clipped) / cfg.span;
    (clipped, round_half_away(x).clamp(1.0, 100.0) as u8)
}

pub fn total_fcs(profile: &NutrientProfile, description: &str, cfg: &ScoringConfig) -> Result<FcsBreakdown> {
    if profile.basis != Basis::Per100kcal {
        return Err(Error::WrongBasis);
    }
    let domains = [
        ("d1_nutrient_ratios", score_nutrient_ratios(profile, description, cfg)?),
        ("d2_vitamins", score_vitamins(profile, cfg)?),
        ("d3_minerals", score_minerals(profile, cfg)?),
        ("d4_ingredients", score_ingredients(profile, cfg)?),
        ("d5_additives", score_additives(profile, cfg)?),
        ("d6_processing", score_processing(profile, description, cfg)?),
        ("d7_specific_lipids", score_lipids(profile, cfg)?),
        ("d8_fiber_protein", score_fiber_protein(profile, cfg)?),
        ("d9_phytochemicals", score_phytochemicals(profile, cfg)?),
    ];
    let d: Vec<f64> = domains.iter().map(|(_, (s, _))| *s).collect();
    let raw_sum: f64 = d.iter().sum();
    let (clipped_sum, final_score) = final_transform(raw_sum, cfg);
    Ok(FcsBreakdown {
        d1: d[0],
        d2: d[1],
        d3: d[2],
        d4: d[3],
        d5: d[4],
        d6: d[5],
        d7: d[6],
        d8: d[7],
        d9: d[8],
        raw_sum,
        clipped_sum,
        final_score,
        audit: domains.into_iter().map(|(name, (score, items))| DomainAudit { domain: name.into(), score, items }).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use TargetKey::*;

    fn base() -> NutrientProfile {
        let mut p = NutrientProfile::zeros(Basis::Per100kcal);
        p.set(NovaClass, 1.0);
        p
    }

    fn with(pairs: &[(TargetKey, f64)]) -> NutrientProfile {
        let mut p = base();
        for &(k, v) in pairs {
            p.set(k, v);
        }
        p
    }

    #[test]
    fn embedded_config_is_valid() {
        let cfg = ScoringConfig::default();
        assert_eq!(cfg.required_targets().len(), 50);
        assert!(!cfg.required_targets().contains(&Calories));
        let prose = cfg.with_prose_clip();
        assert!(prose.validate().is_ok());
        assert_abs_diff_eq!(prose.span, 42.22, epsilon = 1e-9);
    }

    #[test]
    fn scale_examples() {
        let cfg = ScoringConfig::default();
        let vc = cfg.vitamins.iter().find(|r| r.label == "vitamin C").unwrap().params();
        assert_eq!(scale_score(22.5, &vc, false), 10.0);
        assert_eq!(scale_score(11.25, &vc, false), 5.0);
        assert_eq!(scale_score(1e6, &vc, false), 10.0);
        let na = cfg.minerals.last().unwrap().params();
        assert_eq!(na.direction(), Direction::Descending);
        assert_eq!(scale_score(287.5, &na, false), -5.0);
        assert_eq!(scale_score(0.0, &na, false), 0.0);
        // the printed formula gives −10 to a sodium-free food
        assert_eq!(scale_score(0.0, &na, true), -10.0);
    }

    #[test]
    fn ratio_examples() {
        let cfg = ScoringConfig::default();
        let (_, items) = score_nutrient_ratios(&with(&[(UnsaturatedFatG, 2.0), (SaturatedFatG, 1.0)]), "", &cfg).unwrap();
        assert!(items[0].used);
        assert_abs_diff_eq!(items[0].score, 1.13701, epsilon = 1e-3);
        let (_, items) = score_nutrient_ratios(&with(&[(FiberG, 2.0), (CarbohydrateG, 15.0)]), "", &cfg).unwrap();
        assert_abs_diff_eq!(items[1].score, 6.042, epsilon = 1e-3);
        let (d1, items) = score_nutrient_ratios(&with(&[(PotassiumMg, 50.0), (SodiumMg, 50.0)]), "", &cfg).unwrap();
        assert_abs_diff_eq!(items[2].score, -2.406, epsilon = 1e-3);
        assert_eq!(d1, items[2].score);
        let (d1, items) = score_nutrient_ratios(&with(&[(PotassiumMg, 5.0)]), "", &cfg).unwrap();
        assert!(items.iter().all(|i| !i.used));
        assert_eq!(d1, 0.0);
    }

    #[test]
    fn dairy_halves_fat_score() {
        let cfg = ScoringConfig::default();
        let p = with(&[(UnsaturatedFatG, 2.0), (SaturatedFatG, 1.0)]);
        let plain = score_nutrient_ratios(&p, "olive spread", &cfg).unwrap().1[0].score;
        let dairy = score_nutrient_ratios(&p, "whole milk", &cfg).unwrap().1[0].score;
        assert_eq!(dairy, plain * 0.5);
    }

    #[test]
    fn vitamin_and_mineral_examples() {
        let cfg = ScoringConfig::default();
        assert_eq!(score_vitamins(&base(), &cfg).unwrap().0, 0.0);
        assert_eq!(score_vitamins(&with(&[(VitaminCMg, 22.5)]), &cfg).unwrap().0, 2.0);
        let mut p = base();
        for r in &cfg.vitamins {
            p.set(r.keys[0], r.h);
        }
        assert_eq!(score_vitamins(&p, &cfg).unwrap().0, 10.0);
        assert_eq!(score_minerals(&with(&[(CalciumMg, 250.0), (SodiumMg, 575.0)]), &cfg).unwrap().0, 0.0);
        assert_eq!(score_minerals(&base(), &cfg).unwrap().0, 0.0);
        assert_eq!(score_minerals(&with(&[(PotassiumMg, 587.5)]), &cfg).unwrap().0, 1.0);
    }

    #[test]
    fn ingredient_examples() {
        let cfg = ScoringConfig::default();
        assert_eq!(score_ingredients(&with(&[(Fruits, 0.875), (RefinedGrains, 1.38)]), &cfg).unwrap().0, -5.0);
        assert_eq!(score_ingredients(&base(), &cfg).unwrap().0, 0.0);
        let mut p = base();
        for r in cfg.ingredients.iter().filter(|r| r.p_min == 0.0) {
            p.set(r.keys[0], r.h);
        }
        assert_eq!(score_ingredients(&p, &cfg).unwrap().0, 80.0);
        // red and processed meat share one row
        let (_, items) = score_ingredients(&with(&[(RedMeat, 1.0), (CuredMeat, 0.345)]), &cfg).unwrap();
        assert_abs_diff_eq!(items[9].score, -5.0, epsilon = 1e-12);
    }

    #[test]
    fn additive_examples() {
        let cfg = ScoringConfig::default();
        assert_eq!(score_additives(&with(&[(AddedSugarG, 7.5)]), &cfg).unwrap().0, -2.5);
        assert_eq!(score_additives(&base(), &cfg).unwrap().0, 0.0);
        assert_eq!(score_additives(&with(&[(AddedSugarG, 20.0)]), &cfg).unwrap().1[0].score, -10.0);
        assert_eq!(score_additives(&with(&[(CuredMeat, 3.0)]), &cfg).unwrap().1[1].input, 100.0);
    }

    #[test]
    fn nova_and_processing() {
        let cfg = ScoringConfig::default();
        let a = &cfg.nova_anchors;
        assert_eq!(nova_interpolate(1.0, a), 10.0);
        assert_eq!(nova_interpolate(2.5, a), 6.25);
        assert_eq!(nova_interpolate(4.0, a), -10.0);
        let d6 = |p: &NutrientProfile, desc: &str| score_processing(p, desc, &cfg).unwrap().0;
        assert_eq!(d6(&with(&[(NovaClass, 4.0), (FriedFlag, 1.0)]), "x"), -7.5);
        assert_eq!(d6(&with(&[(FermentedPct, 100.0)]), "x"), 7.5);
        assert_eq!(d6(&base(), "apple"), 5.0);
        assert_eq!(d6(&base(), "plain kefir"), 7.5);
        assert_eq!(d6(&base(), "chicken, fried"), 2.5);
        assert_eq!(d6(&with(&[(FermentedPct, 60.0)]), "x"), 7.5);
    }

    #[test]
    fn lipid_examples() {
        let cfg = ScoringConfig::default();
        let d7 = |p: &NutrientProfile| score_lipids(p, &cfg).unwrap().0;
        assert_abs_diff_eq!(d7(&with(&[(EpaG, 0.03125), (DhaG, 0.03125), (CholesterolMg, 75.0)])), 1.25, epsilon = 1e-12);
        assert_eq!(d7(&base()), 0.0);
        // ALA alone: ties among the zero rows go to table order, so the
        // selection is {cholesterol, EPA+DHA, ALA} with weights summing to 2
        assert_abs_diff_eq!(d7(&with(&[(AlaG, 0.4)])), 1.25, epsilon = 1e-12);
        // MCT sums the three fatty acids
        let (_, items) = score_lipids(&with(&[(CaprylicG, 0.1), (CapricG, 0.1), (LauricG, 0.12)]), &cfg).unwrap();
        assert_abs_diff_eq!(items[3].score, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn fiber_protein_and_phyto() {
        let cfg = ScoringConfig::default();
        let d8 = |p: &NutrientProfile| score_fiber_protein(p, &cfg).unwrap().0;
        assert_abs_diff_eq!(d8(&with(&[(FiberG, 9.5), (ProteinG, 7.0)])), 8.3333, epsilon = 1e-3);
        assert_eq!(d8(&base()), 0.0);
        assert_abs_diff_eq!(d8(&with(&[(ProteinG, 14.0)])), 3.3333, epsilon = 1e-3);
        let d9 = |p: &NutrientProfile| score_phytochemicals(p, &cfg).unwrap().0;
        assert_eq!(d9(&with(&[(FlavonoidsMg, 23.53)])), 2.5);
        assert_eq!(d9(&with(&[(FlavonoidsMg, 23.53), (CarotenoidsMcg, 8746.81)])), 5.0);
        assert_eq!(d9(&base()), 0.0);
    }

    #[test]
    fn final_transform_fixed_points() {
        let cfg = ScoringConfig::default();
        assert_eq!(final_transform(29.94, &cfg).1, 100);
        assert_eq!(final_transform(1e3, &cfg).1, 100);
        assert_eq!(final_transform(-12.43, &cfg).1, 1);
        assert_eq!(final_transform(-50.0, &cfg).1, 1);
        assert_eq!(final_transform(8.755, &cfg).1, 51);
        assert_eq!(final_transform(5.0, &cfg).1, 42);
        assert_eq!(round_half_away(-2.5), -3.0);
    }

    #[test]
    fn zero_profile_golden() {
        let b = total_fcs(&base(), "", &ScoringConfig::default()).unwrap();
        assert_eq!(b.d6, 5.0);
        assert_eq!(b.domains().iter().filter(|&&d| d != 0.0).count(), 1);
        assert_eq!(b.final_score, 42);
        assert_eq!(b.audit.len(), 9);
        assert!((b.raw_sum - b.domains().iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let cfg = ScoringConfig::default();
        let mut p = base();
        p.values.remove(&FiberG);
        assert!(matches!(total_fcs(&p, "", &cfg), Err(Error::MissingTarget(k)) if k == "fiber_g"));
        let g = NutrientProfile::zeros(Basis::Per100g);
        assert!(matches!(total_fcs(&g, "", &cfg), Err(Error::WrongBasis)));
        let bad = DEFAULT_SCORING.replace("span = 42.37", "span = 40.0");
        assert!(ScoringConfig::parse(&bad).is_err());
        let bad = DEFAULT_SCORING.replace("[gates]", "bogus = 1\n[gates]");
        assert!(ScoringConfig::parse(&bad).is_err());
    }

    #[test]
    fn and_gate_breaks_sodium_monotonicity() {
        // With both-gated K/Na and a mean D1, sodium crossing the gate can
        // switch on a large positive ratio score.
        let mut cfg = ScoringConfig::default();
        cfg.gates.k_na = KnaGate::Both;
        let lo = with(&[(PotassiumMg, 400.0), (SodiumMg, 9.0)]);
        let hi = with(&[(PotassiumMg, 400.0), (SodiumMg, 11.0)]);
        let a = total_fcs(&lo, "", &cfg).unwrap().final_score;
        let b = total_fcs(&hi, "", &cfg).unwrap().final_score;
        assert!(b > a, "{a} → {b}");
        let cfg = ScoringConfig::default();
        assert!(total_fcs(&hi, "", &cfg).unwrap().final_score <= total_fcs(&lo, "", &cfg).unwrap().final_score);
    }
}
