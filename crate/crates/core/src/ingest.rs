//! Tabular ingestion: parse nutrient, food-pattern, flavonoid and published
//! score tables, join them by food code, drop irregular rows, filter out
//! non-food descriptions and move every amount onto the per-100-kcal basis.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Basis, FoodRecord, NutrientProfile, TargetKey};
use crate::text::tokenize;

/// Records with energy density below this are excluded before normalization.
pub const MIN_KCAL_PER_100G: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    Nutrients,
    FoodPatterns,
    Flavonoids,
    PublishedScores,
}

/// Maps roles onto header names. Value roles are target key names, except in
/// the published-scores table where the single role is `published_fcs`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSchema {
    pub code_column: String,
    #[serde(default)]
    pub description_column: Option<String>,
    #[serde(default)]
    pub category_column: Option<String>,
    #[serde(default)]
    pub columns: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub food_code: String,
    pub description: Option<String>,
    pub category: Option<String>,
    /// `None` marks a cell that did not parse as a finite number.
    pub values: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub source: SourceTag,
    pub path: PathBuf,
    pub rows: Vec<RawRow>,
}

impl RawTable {
    fn index(&self) -> HashMap<&str, &RawRow> {
        self.rows.iter().map(|r| (r.food_code.as_str(), r)).collect()
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse a CSV or TSV table. The delimiter is a tab when the header line
/// contains one, otherwise a comma.
pub fn parse_table(path: &Path, source: SourceTag, schema: &TableSchema) -> Result<RawTable> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header_line = content.lines().find(|l| !l.trim().is_empty()).ok_or_else(|| Error::EmptyFile(path.to_path_buf()))?;
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let headers = reader.headers().map_err(|e| Error::parse(path, e))?.clone();

    let column = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
    };
    let code_idx = column(&schema.code_column)?;
    let desc_idx = schema.description_column.as_deref().map(column).transpose()?;
    let cat_idx = schema.category_column.as_deref().map(column).transpose()?;
    let value_idx = schema
        .columns
        .iter()
        .map(|(role, header)| Ok((role.clone(), column(header)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, e))?;
        let code = record.get(code_idx).unwrap_or("").to_string();
        if code.is_empty() {
            log::warn!("{}: skipping row without a food code", path.display());
            continue;
        }
        if !seen.insert(code.clone()) {
            return Err(Error::DuplicateCode { path: path.to_path_buf(), code });
        }
        let text = |idx: Option<usize>| idx.and_then(|i| record.get(i)).map(str::to_string).filter(|s| !s.is_empty());
        let values = value_idx
            .iter()
            .map(|(role, i)| (role.clone(), record.get(*i).and_then(parse_cell)))
            .collect();
        rows.push(RawRow { food_code: code, description: text(desc_idx), category: text(cat_idx), values });
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(RawTable { source, path: path.to_path_buf(), rows })
}

/// Inner join of nutrient and food-pattern tables; flavonoids and published
/// scores are left-joined. A food missing from the flavonoid table, or with
/// an empty flavonoid cell, gets zero and `flavonoid_imputed = true`.
pub fn join_sources(tables: &[RawTable]) -> Result<Vec<FoodRecord>> {
    let find = |tag| tables.iter().find(|t| t.source == tag);
    let nutrients = find(SourceTag::Nutrients)
        .ok_or_else(|| Error::Config("a nutrients table is required".into()))?;
    let patterns = find(SourceTag::FoodPatterns);
    let flavonoids = find(SourceTag::Flavonoids);
    let published = find(SourceTag::PublishedScores);

    let pattern_idx = patterns.map(RawTable::index);
    let flavonoid_idx = flavonoids.map(RawTable::index);
    let published_idx = published.map(RawTable::index);

    let mut out = Vec::new();
    for row in &nutrients.rows {
        let pattern_row = match &pattern_idx {
            Some(idx) => match idx.get(row.food_code.as_str()) {
                Some(r) => Some(*r),
                None => continue,
            },
            None => None,
        };
        let description = row
            .description
            .clone()
            .or_else(|| pattern_row.and_then(|r| r.description.clone()))
            .unwrap_or_default();
        let mut profile = NutrientProfile::new(Basis::Per100g);
        fill_values(&mut profile, row)?;
        if let Some(p) = pattern_row {
            fill_values(&mut profile, p)?;
        }

        let mut record = FoodRecord::new(row.food_code.clone(), description, profile);
        record.category = row.category.clone().or_else(|| pattern_row.and_then(|r| r.category.clone()));

        if let (Some(table), Some(idx)) = (flavonoids, &flavonoid_idx) {
            let hit = idx.get(row.food_code.as_str());
            for role in flavonoid_roles(table) {
                let key: TargetKey = role.parse()?;
                match hit.and_then(|r| r.values.get(role).copied().flatten()) {
                    Some(v) => record.profile.set(key, v),
                    None => {
                        record.profile.set(key, 0.0);
                        record.flavonoid_imputed = true;
                    }
                }
            }
        }

        if let Some(idx) = &published_idx {
            if let Some(r) = idx.get(row.food_code.as_str()) {
                record.published_fcs = published_score(r);
            }
        }
        out.push(record);
    }
    if out.is_empty() {
        return Err(Error::JoinEmpty);
    }
    Ok(out)
}

fn flavonoid_roles(table: &RawTable) -> BTreeSet<&String> {
    table.rows.iter().flat_map(|r| r.values.keys()).collect()
}

fn fill_values(profile: &mut NutrientProfile, row: &RawRow) -> Result<()> {
    for (role, value) in &row.values {
        let key: TargetKey = role.parse()?;
        if let Some(v) = value {
            profile.set(key, *v);
        }
    }
    Ok(())
}

fn published_score(row: &RawRow) -> Option<u8> {
    let v = row.values.values().next().copied().flatten()?;
    let rounded = v.round();
    (1.0..=100.0).contains(&rounded).then_some(rounded as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    MissingValue(TargetKey),
    NegativeValue(TargetKey),
    NearZeroEnergy,
    NonFood,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DropReason::MissingValue(k) => write!(f, "missing value ({k})"),
            DropReason::NegativeValue(k) => write!(f, "negative value ({k})"),
            DropReason::NearZeroEnergy => f.write_str("near-zero energy"),
            DropReason::NonFood => f.write_str("non-food description"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dropped {
    pub record: FoodRecord,
    pub reason: DropReason,
}

/// Drop records with a missing or negative value in any registered target.
pub fn clean_records(records: Vec<FoodRecord>) -> (Vec<FoodRecord>, Vec<Dropped>) {
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = Vec::new();
    for record in records {
        let problem = TargetKey::ALL.iter().find_map(|&key| match record.profile.get(key) {
            None => Some(DropReason::MissingValue(key)),
            Some(v) if !v.is_finite() => Some(DropReason::MissingValue(key)),
            Some(v) if v < 0.0 => Some(DropReason::NegativeValue(key)),
            Some(_) => None,
        });
        match problem {
            Some(reason) => dropped.push(Dropped { record, reason }),
            None => kept.push(record),
        }
    }
    (kept, dropped)
}

pub fn is_nonfood(description: &str, denylist: &BTreeSet<String>) -> bool {
    let tokens = tokenize(description);
    let has_alpha = tokens.iter().any(|t| t.chars().any(char::is_alphabetic));
    !has_alpha || tokens.iter().any(|t| denylist.contains(t))
}

/// Reject descriptions containing a denylisted word or no alphabetic token.
pub fn filter_nonfood(records: Vec<FoodRecord>, denylist: &BTreeSet<String>) -> (Vec<FoodRecord>, Vec<FoodRecord>) {
    records.into_iter().partition(|r| !is_nonfood(&r.description, denylist))
}

/// Convert a per-100 g profile to the per-100 kcal basis. Amounts scale by
/// `100 / kcal_per_100g`; energy density and the processing attributes are
/// carried over unchanged.
pub fn normalize_per_100kcal(profile: &NutrientProfile, kcal_per_100g: f64) -> Result<NutrientProfile> {
    if profile.basis != Basis::Per100g {
        return Err(Error::Invariant("profile is already on the per-100 kcal basis".into()));
    }
    if !(kcal_per_100g >= MIN_KCAL_PER_100G) {
        return Err(Error::NearZeroEnergy(kcal_per_100g));
    }
    let factor = 100.0 / kcal_per_100g;
    let values = profile
        .values
        .iter()
        .map(|(&k, &v)| (k, if k.is_amount() { v * factor } else { v }));
    Ok(NutrientProfile::with_values(Basis::Per100kcal, values))
}

/// Normalize every record using its own `calories` value, excluding those
/// below the energy floor.
pub fn normalize_records(records: Vec<FoodRecord>) -> Result<(Vec<FoodRecord>, Vec<Dropped>)> {
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = Vec::new();
    for mut record in records {
        let kcal = record.profile.require(TargetKey::Calories)?;
        match normalize_per_100kcal(&record.profile, kcal) {
            Ok(p) => {
                record.profile = p;
                kept.push(record);
            }
            Err(Error::NearZeroEnergy(_)) => dropped.push(Dropped { record, reason: DropReason::NearZeroEnergy }),
            Err(e) => return Err(e),
        }
    }
    Ok((kept, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub path: PathBuf,
    pub schema: TableSchema,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub nutrients: Option<SourceSpec>,
    #[serde(default)]
    pub food_patterns: Option<SourceSpec>,
    #[serde(default)]
    pub flavonoids: Option<SourceSpec>,
    #[serde(default)]
    pub published_scores: Option<SourceSpec>,
    /// Values for targets that no table supplies (per 100 g for amounts).
    #[serde(default)]
    pub defaults: BTreeMap<TargetKey, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestAudit {
    pub joined: usize,
    pub dropped_missing: usize,
    pub dropped_negative: usize,
    pub rejected_nonfood: usize,
    pub dropped_near_zero_energy: usize,
    pub flavonoid_imputed: usize,
    pub kept: usize,
}

impl IngestConfig {
    pub fn sources(&self) -> Vec<(SourceTag, &SourceSpec)> {
        [
            (SourceTag::Nutrients, &self.nutrients),
            (SourceTag::FoodPatterns, &self.food_patterns),
            (SourceTag::Flavonoids, &self.flavonoids),
            (SourceTag::PublishedScores, &self.published_scores),
        ]
        .into_iter()
        .filter_map(|(tag, spec)| spec.as_ref().map(|s| (tag, s)))
        .collect()
    }
}

/// parse → join → defaults → clean → non-food filter → normalize.
pub fn run_ingest(config: &IngestConfig, denylist: &BTreeSet<String>) -> Result<(Vec<FoodRecord>, IngestAudit)> {
    let tables = config
        .sources()
        .into_iter()
        .map(|(tag, spec)| parse_table(&spec.path, tag, &spec.schema))
        .collect::<Result<Vec<_>>>()?;
    let mut joined = join_sources(&tables)?;
    for record in &mut joined {
        for (&key, &value) in &config.defaults {
            record.profile.values.entry(key).or_insert(value);
        }
    }
    let mut audit = IngestAudit { joined: joined.len(), ..Default::default() };

    let (cleaned, dropped) = clean_records(joined);
    for d in &dropped {
        match d.reason {
            DropReason::NegativeValue(_) => audit.dropped_negative += 1,
            _ => audit.dropped_missing += 1,
        }
    }
    let (foods, rejected) = filter_nonfood(cleaned, denylist);
    audit.rejected_nonfood = rejected.len();
    let (normalized, near_zero) = normalize_records(foods)?;
    audit.dropped_near_zero_energy = near_zero.len();
    audit.flavonoid_imputed = normalized.iter().filter(|r| r.flavonoid_imputed).count();
    audit.kept = normalized.len();
    Ok((normalized, audit))
}

/// Write the canonical dataset: one JSON object per line.
pub fn write_dataset(path: &Path, records: &[FoodRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::parse(path, e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<FoodRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FoodRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", i + 1)))?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}
