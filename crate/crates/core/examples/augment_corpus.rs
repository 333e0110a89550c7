//! Rewrite a sample of descriptions with synonyms, cooking modifiers and
//! portion qualifiers, scaling the targets to match.
//!
//!     cargo run --example augment_corpus

use food_compass::augment::{augment_dataset, AugmentationRules};
use food_compass::model::{Basis, FoodRecord, NutrientProfile, TargetKey};

pub fn run_example() -> food_compass::Result<Vec<FoodRecord>> {
    let descriptions = [
        "grilled chicken sandwich",
        "beef stew with potatoes",
        "cola soda",
        "turkey sandwich on wheat",
        "baked potato",
        "chicken noodle soup",
        "steamed broccoli",
        "white rice",
        "scrambled eggs",
        "apple slices",
    ];
    let records: Vec<FoodRecord> = descriptions
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut p = NutrientProfile::zeros(Basis::Per100kcal);
            p.set(TargetKey::ProteinG, 2.0 + i as f64);
            p.set(TargetKey::SaturatedFatG, 0.5);
            p.set(TargetKey::NovaClass, 1.0);
            FoodRecord::new(format!("{}", 100 + i), *d, p)
        })
        .collect();

    let rules = AugmentationRules::default();
    let out = augment_dataset(&records, &rules, 3);
    for v in out.iter().filter(|r| r.augmented.is_some()) {
        let prov = v.augmented.as_ref().expect("filtered");
        let src = &records[prov.source_index];
        println!(
            "{:<28} -> {:<36} [{}]  protein {:.2} -> {:.2}",
            src.description,
            v.description,
            prov.transform,
            src.profile.get(TargetKey::ProteinG).unwrap_or(0.0),
            v.profile.get(TargetKey::ProteinG).unwrap_or(0.0),
        );
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> food_compass::Result<()> {
    run_example().map(|_| ())
}
