//! Validation with stand-in predictors: one that returns the true profile
//! (r = 1) and one that shrinks every value toward zero.
//!
//!     cargo run --example validate_predictions

use std::collections::HashMap;
use std::path::Path;

use food_compass::config::PipelineConfig;
use food_compass::ingest::run_ingest;
use food_compass::model::NutrientProfile;
use food_compass::neural::ProfilePredictor;
use food_compass::validate::{run_validation, ValidationReport};
use food_compass::Error;

struct Lookup {
    profiles: HashMap<String, NutrientProfile>,
    shrink: f64,
}

impl ProfilePredictor for Lookup {
    fn predict_profile(&self, description: &str) -> food_compass::Result<NutrientProfile> {
        let mut p = self.profiles.get(description).cloned().ok_or_else(|| Error::UnknownText(description.into()))?;
        for (k, v) in p.values.iter_mut() {
            if k.is_amount() {
                *v *= self.shrink;
            }
        }
        Ok(p)
    }
}

pub fn run_example() -> food_compass::Result<(ValidationReport, ValidationReport)> {
    let cfg = PipelineConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/pipeline.toml"))?;
    let (records, _) = run_ingest(&cfg.ingest, &cfg.denylist()?)?;
    let profiles: HashMap<String, NutrientProfile> = records.iter().map(|r| (r.description.clone(), r.profile.clone())).collect();
    let scoring = cfg.scoring_config()?;

    let mut reports = Vec::new();
    for shrink in [1.0, 0.5] {
        let predictor = Lookup { profiles: profiles.clone(), shrink };
        let (report, _) = run_validation(&predictor, &records, &scoring, &cfg.validation, &|_| false)?;
        println!(
            "shrink {shrink}: n {}, r {:.4}, MAD {:.2}, within ±15 {:.2}, worst {:?}",
            report.n,
            report.pearson_r.unwrap_or(f64::NAN),
            report.stats.mad,
            report.within[0].fraction,
            report.worst.first().map(|w| &w.description)
        );
        reports.push(report);
    }
    let second = reports.pop().expect("two runs");
    Ok((reports.pop().expect("two runs"), second))
}

#[allow(dead_code)]
fn main() -> food_compass::Result<()> {
    run_example().map(|_| ())
}
