//! ingest -> train -> validate -> score on the synthetic corpus, inside a
//! scratch directory.
//!
//!     cargo run --release --example end_to_end

use std::path::Path;

use food_compass::config::PipelineConfig;
use food_compass::pipeline::{cmd_ingest, cmd_score, cmd_train, cmd_validate, ScoreInput, ScoreOutput};
use food_compass::validate::ValidationReport;

pub fn run_in(dir: &Path) -> food_compass::Result<(ValidationReport, ScoreOutput)> {
    let mut cfg = PipelineConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/pipeline.toml"))?;
    cfg.paths.dataset = Some(dir.join("dataset.jsonl"));
    cfg.paths.bundle = Some(dir.join("bundle"));
    cfg.paths.reports = Some(dir.join("reports"));

    let audit = cmd_ingest(&cfg)?;
    println!("ingest kept {} of {} rows", audit.kept, audit.joined);
    let summary = cmd_train(&cfg)?;
    println!("trained {} targets, median test R² {:?}", summary.trained.len(), summary.median_r2);
    let report = cmd_validate(&cfg)?;
    println!("validation: r {:?}, MAD {:.2}", report.pearson_r, report.stats.mad);

    let text = "grilled chicken sandwich with lettuce and tomato";
    let scored = cmd_score(&cfg, ScoreInput::Description { description: text.into() })?;
    println!("{text:?} -> FCS {}", scored.breakdown.final_score);
    Ok((report, scored))
}

pub fn run_example() -> food_compass::Result<(ValidationReport, ScoreOutput)> {
    let dir = tempfile::tempdir().map_err(|e| food_compass::Error::Invariant(e.to_string()))?;
    run_in(dir.path())
}

#[allow(dead_code)]
fn main() -> food_compass::Result<()> {
    run_example().map(|_| ())
}
