//! Run parse -> join -> clean -> non-food filter -> normalize over the
//! bundled synthetic tables and show what survived.
//!
//!     cargo run --example ingest_tables

use std::path::Path;

use food_compass::config::PipelineConfig;
use food_compass::ingest::{run_ingest, IngestAudit};
use food_compass::model::{FoodRecord, TargetKey};

pub fn synthetic_config() -> food_compass::Result<PipelineConfig> {
    PipelineConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/pipeline.toml"))
}

pub fn run_example() -> food_compass::Result<(Vec<FoodRecord>, IngestAudit)> {
    let cfg = synthetic_config()?;
    let (records, audit) = run_ingest(&cfg.ingest, &cfg.denylist()?)?;
    println!("{audit:#?}");
    for r in records.iter().take(5) {
        println!(
            "{:>6}  {:<32} fcs {:>3}  kcal/100g {:>6.1}  fiber {:>5.2} g/100kcal  sodium {:>7.1} mg/100kcal",
            r.food_code,
            r.description,
            r.published_fcs.map_or("-".into(), |v| v.to_string()),
            r.profile.get(TargetKey::Calories).unwrap_or(f64::NAN),
            r.profile.get(TargetKey::FiberG).unwrap_or(f64::NAN),
            r.profile.get(TargetKey::SodiumMg).unwrap_or(f64::NAN),
        );
    }
    Ok((records, audit))
}

#[allow(dead_code)]
fn main() -> food_compass::Result<()> {
    run_example().map(|_| ())
}
