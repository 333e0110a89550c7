//! Score a hand-written per-100 kcal profile and print the domain audit.
//!
//!     cargo run --example score_profile

use food_compass::model::{Basis, NutrientProfile, TargetKey};
use food_compass::scorer::{total_fcs, FcsBreakdown, ScoringConfig};

/// Roughly a serving of lentil soup, expressed per 100 kcal.
pub fn lentil_soup() -> NutrientProfile {
    use TargetKey::*;
    let mut p = NutrientProfile::zeros(Basis::Per100kcal);
    for (k, v) in [
        (ProteinG, 6.5),
        (CarbohydrateG, 15.0),
        (FiberG, 5.2),
        (SaturatedFatG, 0.3),
        (UnsaturatedFatG, 1.1),
        (AlaG, 0.08),
        (FolateDfeMcg, 110.0),
        (IronMg, 1.9),
        (MagnesiumMg, 28.0),
        (PotassiumMg, 290.0),
        (SodiumMg, 240.0),
        (ZincMg, 0.9),
        (ThiaminMg, 0.12),
        (VitaminB6Mg, 0.1),
        (VitaminKMcg, 4.0),
        (CarotenoidsMcg, 600.0),
        (FlavonoidsMg, 1.2),
        (BeansLegumes, 0.45),
        (NonstarchyVegetables, 0.2),
        (NovaClass, 3.0),
    ] {
        p.set(k, v);
    }
    p
}

pub fn run_example() -> food_compass::Result<FcsBreakdown> {
    let cfg = ScoringConfig::default();
    let fcs = total_fcs(&lentil_soup(), "lentil soup", &cfg)?;
    for d in &fcs.audit {
        println!("{:<22} {:>7.3}", d.domain, d.score);
        for item in d.items.iter().filter(|i| i.used) {
            println!("    {:<28} in {:>9.3}  score {:>7.3}", item.name, item.input, item.score);
        }
    }
    println!("raw {:.3}  clipped {:.3}  FCS {}", fcs.raw_sum, fcs.clipped_sum, fcs.final_score);
    Ok(fcs)
}

#[allow(dead_code)]
fn main() -> food_compass::Result<()> {
    run_example().map(|_| ())
}
