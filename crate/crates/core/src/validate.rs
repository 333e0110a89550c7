//! Predicted-versus-published score comparison.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{error_stats, pearson, threshold_rates, ErrorStats};
use crate::model::FoodRecord;
use crate::neural::ProfilePredictor;
use crate::scorer::{total_fcs, ScoringConfig};

pub const UNCATEGORIZED: &str = "uncategorized";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub thresholds: Vec<f64>,
    pub worst_k: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { thresholds: vec![15.0, 25.0], worst_k: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub food_code: String,
    pub description: String,
    pub category: Option<String>,
    pub actual: u8,
    pub predicted: u8,
    pub abs_diff: f64,
    pub in_training: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    pub n: usize,
    pub mad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRate {
    pub threshold: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstItem {
    pub description: String,
    pub actual: u8,
    pub predicted: u8,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub excluded_missing_fcs: usize,
    /// Rows whose description also appears in the training data.
    pub overlap_with_training: usize,
    pub pearson_r: Option<f64>,
    pub pearson_p: Option<f64>,
    #[serde(flatten)]
    pub stats: ErrorStats,
    pub within: Vec<ThresholdRate>,
    pub categories: Vec<CategoryRow>,
    pub worst: Vec<WorstItem>,
}

/// MAD per category, highest first (ties by name). Rows without a
/// category are pooled under [`UNCATEGORIZED`].
pub fn category_breakdown(categories: &[Option<String>], abs_diff: &[f64]) -> Vec<CategoryRow> {
    let mut groups: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for (c, d) in categories.iter().zip(abs_diff) {
        let e = groups.entry(c.as_deref().unwrap_or(UNCATEGORIZED)).or_default();
        e.0 += 1;
        e.1 += d;
    }
    let mut rows: Vec<CategoryRow> = groups.into_iter().map(|(c, (n, s))| CategoryRow { category: c.to_string(), n, mad: s / n as f64 }).collect();
    rows.sort_by(|a, b| b.mad.total_cmp(&a.mad).then_with(|| a.category.cmp(&b.category)));
    rows
}

/// Build the report from finished per-item results.
pub fn summarize(items: &[ItemResult], excluded: usize, cfg: &ValidationConfig) -> Result<ValidationReport> {
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let actual: Vec<f64> = items.iter().map(|i| i.actual as f64).collect();
    let predicted: Vec<f64> = items.iter().map(|i| i.predicted as f64).collect();
    let (pearson_r, pearson_p) = match pearson(&actual, &predicted) {
        Ok((r, p)) => (Some(r), Some(p)),
        Err(Error::ConstantInput | Error::TooFewRows { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    let rates = threshold_rates(&predicted, &actual, &cfg.thresholds)?;
    let abs: Vec<f64> = items.iter().map(|i| i.abs_diff).collect();
    let cats: Vec<Option<String>> = items.iter().map(|i| i.category.clone()).collect();

    let mut worst: Vec<&ItemResult> = items.iter().collect();
    worst.sort_by(|a, b| {
        b.abs_diff.total_cmp(&a.abs_diff).then_with(|| a.description.cmp(&b.description)).then_with(|| a.food_code.cmp(&b.food_code))
    });
    Ok(ValidationReport {
        n: items.len(),
        excluded_missing_fcs: excluded,
        overlap_with_training: items.iter().filter(|i| i.in_training).count(),
        pearson_r,
        pearson_p,
        stats: error_stats(&predicted, &actual)?,
        within: cfg.thresholds.iter().zip(rates).map(|(&threshold, fraction)| ThresholdRate { threshold, fraction }).collect(),
        categories: category_breakdown(&cats, &abs),
        worst: worst
            .into_iter()
            .take(cfg.worst_k)
            .map(|i| WorstItem { description: i.description.clone(), actual: i.actual, predicted: i.predicted, abs_diff: i.abs_diff })
            .collect(),
    })
}

/// Predict, score and compare every labeled record. `in_training` flags
/// descriptions seen during training.
pub fn run_validation(
    predictor: &dyn ProfilePredictor,
    records: &[FoodRecord],
    scoring: &ScoringConfig,
    cfg: &ValidationConfig,
    in_training: &(dyn Fn(&str) -> bool + Sync),
) -> Result<(ValidationReport, Vec<ItemResult>)> {
    let labeled: Vec<&FoodRecord> = records.iter().filter(|r| r.published_fcs.is_some()).collect();
    let excluded = records.len() - labeled.len();
    if labeled.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let items = labeled
        .par_iter()
        .map(|r| {
            let profile = predictor.predict_profile(&r.description)?;
            let predicted = total_fcs(&profile, &r.description, scoring)?.final_score;
            let actual = r.published_fcs.unwrap_or_default();
            Ok(ItemResult {
                food_code: r.food_code.clone(),
                description: r.description.clone(),
                category: r.category.clone(),
                actual,
                predicted,
                abs_diff: (actual as f64 - predicted as f64).abs(),
                in_training: in_training(&r.description),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = summarize(&items, excluded, cfg)?;
    Ok((report, items))
}

pub fn write_report(path: &Path, report: &ValidationReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Invariant(e.to_string()))?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

/// Per-item CSV: description, actual, predicted, abs_diff (plus code and category).
pub fn write_items_csv(path: &Path, items: &[ItemResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))?;
    let io = |e: csv::Error| Error::parse(path, e);
    w.write_record(["food_code", "description", "category", "actual", "predicted", "abs_diff", "in_training"]).map_err(io)?;
    for i in items {
        w.write_record([
            i.food_code.as_str(),
            i.description.as_str(),
            i.category.as_deref().unwrap_or(""),
            &i.actual.to_string(),
            &i.predicted.to_string(),
            &i.abs_diff.to_string(),
            if i.in_training { "1" } else { "0" },
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Two-column `actual,predicted` file for plotting.
pub fn write_scatter(path: &Path, items: &[ItemResult]) -> Result<()> {
    let mut out = String::from("actual,predicted\n");
    for i in items {
        out.push_str(&format!("{},{}\n", i.actual, i.predicted));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Basis, NutrientProfile, TargetKey};

    fn item(code: &str, cat: Option<&str>, actual: u8, predicted: u8) -> ItemResult {
        ItemResult {
            food_code: code.into(),
            description: format!("food {code}"),
            category: cat.map(str::to_string),
            actual,
            predicted,
            abs_diff: (actual as f64 - predicted as f64).abs(),
            in_training: false,
        }
    }

    #[test]
    fn categories() {
        let rows = category_breakdown(&[Some("a".into()), Some("a".into())], &[2.0, 4.0]);
        assert_eq!(rows, vec![CategoryRow { category: "a".into(), n: 2, mad: 3.0 }]);
        let rows = category_breakdown(&[Some("low".into()), Some("high".into())], &[3.0, 8.0]);
        assert_eq!(rows.iter().map(|r| r.category.as_str()).collect::<Vec<_>>(), ["high", "low"]);
        let rows = category_breakdown(&[None, None], &[1.0, 2.0]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].category, UNCATEGORIZED);
    }

    #[test]
    fn two_row_fixture() {
        let items = [item("1", Some("x"), 10, 12), item("2", None, 20, 16)];
        let r = summarize(&items, 3, &ValidationConfig::default()).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.excluded_missing_fcs, 3);
        assert_eq!((r.stats.mad, r.stats.median_ad, r.stats.mean_difference), (3.0, 3.0, 1.0));
        assert_eq!(r.within[0].fraction, 1.0);
        assert_eq!(r.pearson_r, None);
        assert_eq!(r.worst[0].abs_diff, 4.0);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<ValidationReport>(&json).unwrap(), r);
    }

    #[test]
    fn permutation_invariant() {
        let mut items: Vec<ItemResult> = (0..30).map(|i| item(&i.to_string(), Some(["a", "b", "c"][i % 3]), (i * 3 % 100 + 1) as u8, (i * 7 % 100 + 1) as u8)).collect();
        let a = summarize(&items, 0, &ValidationConfig::default()).unwrap();
        items.reverse();
        items.swap(3, 17);
        let b = summarize(&items, 0, &ValidationConfig::default()).unwrap();
        assert_eq!(a.worst, b.worst);
        assert_eq!(a.categories.len(), b.categories.len());
        for (x, y) in a.categories.iter().zip(&b.categories) {
            assert_eq!(x.category, y.category);
            assert!((x.mad - y.mad).abs() < 1e-12);
        }
        assert!((a.pearson_r.unwrap() - b.pearson_r.unwrap()).abs() < 1e-12);
        assert!((a.stats.mad - b.stats.mad).abs() < 1e-12);
    }

    struct Oracle(BTreeMap<String, NutrientProfile>);

    impl ProfilePredictor for Oracle {
        fn predict_profile(&self, d: &str) -> Result<NutrientProfile> {
            Ok(self.0[d].clone())
        }
    }

    #[test]
    fn oracle_predictor_is_perfect() {
        let scoring = ScoringConfig::default();
        let mut records = Vec::new();
        let mut truth = BTreeMap::new();
        for i in 0..12 {
            let mut p = NutrientProfile::zeros(Basis::Per100kcal);
            p.set(TargetKey::NovaClass, 1.0 + (i % 4) as f64);
            p.set(TargetKey::FiberG, i as f64);
            p.set(TargetKey::SodiumMg, 50.0 * i as f64);
            let desc = format!("item {i}");
            let mut r = FoodRecord::new(i.to_string(), &desc, p.clone());
            r.published_fcs = Some(total_fcs(&p, &desc, &scoring).unwrap().final_score);
            truth.insert(desc, p);
            records.push(r);
        }
        records.push(FoodRecord::new("u", "unlabeled", NutrientProfile::zeros(Basis::Per100kcal)));
        let (report, items) = run_validation(&Oracle(truth), &records, &scoring, &ValidationConfig::default(), &|_| false).unwrap();
        assert_eq!(items.len(), 12);
        assert_eq!(report.excluded_missing_fcs, 1);
        assert!((report.pearson_r.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(report.stats.mad, 0.0);
    }

    #[test]
    fn empty_dataset() {
        let oracle = Oracle(BTreeMap::new());
        let records = vec![FoodRecord::new("u", "x", NutrientProfile::zeros(Basis::Per100kcal))];
        let err = run_validation(&oracle, &records, &ScoringConfig::default(), &ValidationConfig::default(), &|_| false).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }
}
