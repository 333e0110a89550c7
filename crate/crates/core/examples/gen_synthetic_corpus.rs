//! Regenerate the small synthetic corpus under `data/synthetic/`.
//!
//! Fifty foods built from a handful of archetypes, plus four rows that the
//! ingest stage is expected to throw away (an N/A cell, a negative value, a
//! non-food description and a near-zero energy row). Published scores are
//! computed with the default scorer so the labels are self-consistent.
//!
//!     cargo run --example gen_synthetic_corpus [OUT_DIR]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use food_compass::ingest::normalize_per_100kcal;
use food_compass::model::{Basis, NutrientProfile, TargetKey};
use food_compass::scorer::{total_fcs, ScoringConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq)]
enum Arch {
    Fruit,
    Vegetable,
    Legume,
    NutSeed,
    WholeGrain,
    RefinedGrain,
    RedMeat,
    CuredMeat,
    Poultry,
    Seafood,
    Dairy,
    Yogurt,
    Sweet,
    FriedSnack,
    Beverage,
}

use Arch::*;

const FOODS: &[(&str, &str, Arch)] = &[
    ("apple, raw", "fruit", Fruit),
    ("banana, raw", "fruit", Fruit),
    ("orange juice, fresh", "fruit", Fruit),
    ("strawberries, raw", "fruit", Fruit),
    ("blueberries, frozen", "fruit", Fruit),
    ("broccoli, steamed", "vegetables", Vegetable),
    ("spinach salad with tomato", "vegetables", Vegetable),
    ("carrots, raw", "vegetables", Vegetable),
    ("green beans, boiled", "vegetables", Vegetable),
    ("kale, sauteed in olive oil", "vegetables", Vegetable),
    ("black beans, boiled", "legumes", Legume),
    ("lentil soup", "legumes", Legume),
    ("chickpea hummus", "legumes", Legume),
    ("tofu, firm", "legumes", Legume),
    ("almonds, roasted", "nuts and seeds", NutSeed),
    ("peanut butter", "nuts and seeds", NutSeed),
    ("sunflower seeds", "nuts and seeds", NutSeed),
    ("walnuts", "nuts and seeds", NutSeed),
    ("oatmeal, cooked with water", "grains", WholeGrain),
    ("brown rice, cooked", "grains", WholeGrain),
    ("whole wheat bread", "grains", WholeGrain),
    ("quinoa salad", "grains", WholeGrain),
    ("white rice, cooked", "grains", RefinedGrain),
    ("white bread", "grains", RefinedGrain),
    ("plain bagel", "grains", RefinedGrain),
    ("spaghetti with tomato sauce", "mixed dishes", RefinedGrain),
    ("beef steak, grilled", "meat", RedMeat),
    ("hamburger on a bun", "mixed dishes", RedMeat),
    ("pork chop, broiled", "meat", RedMeat),
    ("bacon, pan fried", "meat", CuredMeat),
    ("ham sandwich", "mixed dishes", CuredMeat),
    ("salami slices", "meat", CuredMeat),
    ("hot dog with bun", "mixed dishes", CuredMeat),
    ("grilled chicken sandwich with lettuce and tomato", "mixed dishes", Poultry),
    ("chicken breast, roasted", "poultry", Poultry),
    ("turkey slices", "poultry", Poultry),
    ("salmon fillet, baked", "seafood", Seafood),
    ("tuna salad", "seafood", Seafood),
    ("shrimp, steamed", "seafood", Seafood),
    ("sardines in oil", "seafood", Seafood),
    ("whole milk", "dairy", Dairy),
    ("cheddar cheese", "dairy", Dairy),
    ("vanilla ice cream", "sweets", Dairy),
    ("plain yogurt, low fat", "dairy", Yogurt),
    ("kefir, plain", "dairy", Yogurt),
    ("chocolate chip cookies", "sweets", Sweet),
    ("glazed doughnut", "sweets", Sweet),
    ("potato chips", "snacks", FriedSnack),
    ("french fries", "snacks", FriedSnack),
    ("cola soft drink", "beverages", Beverage),
];

/// Per-100 g values before jitter.
fn base(arch: Arch) -> BTreeMap<TargetKey, f64> {
    use TargetKey as K;
    let mut v: BTreeMap<TargetKey, f64> = TargetKey::ALL.iter().map(|&k| (k, 0.0)).collect();
    let mut set = |pairs: &[(TargetKey, f64)]| {
        for &(k, x) in pairs {
            v.insert(k, x);
        }
    };
    // small background amounts of most micronutrients
    set(&[
        (K::ProteinG, 2.0), (K::CarbohydrateG, 10.0), (K::FiberG, 1.0), (K::SaturatedFatG, 0.3),
        (K::UnsaturatedFatG, 0.6), (K::VitaminARaeMcg, 10.0), (K::ThiaminMg, 0.05), (K::RiboflavinMg, 0.05),
        (K::NiacinMg, 0.5), (K::VitaminB6Mg, 0.05), (K::FolateDfeMcg, 10.0), (K::VitaminCMg, 1.0),
        (K::VitaminEMg, 0.2), (K::VitaminKMcg, 2.0), (K::CholineMg, 8.0), (K::CalciumMg, 15.0), (K::IronMg, 0.4),
        (K::MagnesiumMg, 12.0), (K::PhosphorusMg, 30.0), (K::PotassiumMg, 150.0), (K::ZincMg, 0.3),
        (K::CopperMg, 0.05), (K::SeleniumMcg, 1.0), (K::SodiumMg, 20.0), (K::CarotenoidsMcg, 30.0),
        (K::NovaClass, 1.0),
    ]);
    match arch {
        Fruit => set(&[
            (K::CarbohydrateG, 14.0), (K::FiberG, 2.4), (K::VitaminCMg, 30.0), (K::PotassiumMg, 200.0),
            (K::Fruits, 0.6), (K::CarotenoidsMcg, 120.0), (K::FlavonoidsMg, 15.0), (K::ProteinG, 0.6),
        ]),
        Vegetable => set(&[
            (K::CarbohydrateG, 6.0), (K::FiberG, 2.8), (K::VitaminCMg, 40.0), (K::VitaminKMcg, 120.0),
            (K::VitaminARaeMcg, 250.0), (K::FolateDfeMcg, 80.0), (K::PotassiumMg, 320.0), (K::NonstarchyVegetables, 0.8),
            (K::CarotenoidsMcg, 4000.0), (K::FlavonoidsMg, 8.0), (K::AlaG, 0.1), (K::ProteinG, 2.5),
        ]),
        Legume => set(&[
            (K::ProteinG, 9.0), (K::CarbohydrateG, 20.0), (K::FiberG, 7.0), (K::FolateDfeMcg, 150.0),
            (K::IronMg, 2.5), (K::MagnesiumMg, 50.0), (K::PotassiumMg, 380.0), (K::BeansLegumes, 0.4),
            (K::AlaG, 0.15), (K::UnsaturatedFatG, 1.5), (K::FlavonoidsMg, 3.0), (K::NovaClass, 1.0),
        ]),
        NutSeed => set(&[
            (K::ProteinG, 20.0), (K::CarbohydrateG, 20.0), (K::FiberG, 9.0), (K::SaturatedFatG, 5.0),
            (K::UnsaturatedFatG, 40.0), (K::VitaminEMg, 15.0), (K::MagnesiumMg, 250.0), (K::CopperMg, 1.0),
            (K::ZincMg, 3.0), (K::NutsSeeds, 3.5), (K::AlaG, 1.5), (K::PotassiumMg, 650.0), (K::FlavonoidsMg, 10.0),
        ]),
        WholeGrain => set(&[
            (K::ProteinG, 5.0), (K::CarbohydrateG, 30.0), (K::FiberG, 4.0), (K::ThiaminMg, 0.2), (K::NiacinMg, 2.5),
            (K::MagnesiumMg, 60.0), (K::SeleniumMcg, 12.0), (K::WholeGrains, 1.0), (K::ZincMg, 1.2), (K::NovaClass, 2.0),
        ]),
        RefinedGrain => set(&[
            (K::ProteinG, 6.0), (K::CarbohydrateG, 45.0), (K::FiberG, 1.5), (K::ThiaminMg, 0.4), (K::NiacinMg, 3.5),
            (K::FolateDfeMcg, 120.0), (K::IronMg, 2.5), (K::SodiumMg, 350.0), (K::RefinedGrains, 1.5),
            (K::AddedSugarG, 3.0), (K::NovaClass, 3.0),
        ]),
        RedMeat => set(&[
            (K::ProteinG, 25.0), (K::CarbohydrateG, 0.5), (K::FiberG, 0.0), (K::SaturatedFatG, 6.0),
            (K::UnsaturatedFatG, 7.0), (K::CholesterolMg, 80.0), (K::VitaminB12Mcg, 2.5), (K::ZincMg, 5.0),
            (K::IronMg, 2.6), (K::SeleniumMcg, 25.0), (K::RedMeat, 3.0), (K::SodiumMg, 70.0), (K::CholineMg, 90.0),
            (K::CarotenoidsMcg, 0.0), (K::NovaClass, 1.0),
        ]),
        CuredMeat => set(&[
            (K::ProteinG, 16.0), (K::CarbohydrateG, 2.0), (K::FiberG, 0.0), (K::SaturatedFatG, 9.0),
            (K::UnsaturatedFatG, 12.0), (K::CholesterolMg, 70.0), (K::SodiumMg, 1200.0), (K::CuredMeat, 2.8),
            (K::VitaminB12Mcg, 1.0), (K::AddedSugarG, 1.0), (K::CarotenoidsMcg, 0.0), (K::NovaClass, 4.0),
        ]),
        Poultry => set(&[
            (K::ProteinG, 24.0), (K::CarbohydrateG, 3.0), (K::FiberG, 0.3), (K::SaturatedFatG, 1.5),
            (K::UnsaturatedFatG, 3.5), (K::CholesterolMg, 75.0), (K::NiacinMg, 10.0), (K::VitaminB6Mg, 0.6),
            (K::SeleniumMcg, 22.0), (K::PhosphorusMg, 200.0), (K::CholineMg, 80.0), (K::SodiumMg, 300.0),
            (K::NovaClass, 1.0),
        ]),
        Seafood => set(&[
            (K::ProteinG, 22.0), (K::CarbohydrateG, 0.5), (K::FiberG, 0.0), (K::SaturatedFatG, 1.5),
            (K::UnsaturatedFatG, 6.0), (K::CholesterolMg, 60.0), (K::EpaG, 0.5), (K::DhaG, 1.0), (K::Seafood, 3.3),
            (K::VitaminB12Mcg, 3.0), (K::VitaminDMcg, 10.0), (K::SeleniumMcg, 36.0), (K::SodiumMg, 80.0),
            (K::NovaClass, 1.0),
        ]),
        Dairy => set(&[
            (K::ProteinG, 8.0), (K::CarbohydrateG, 8.0), (K::FiberG, 0.0), (K::SaturatedFatG, 8.0),
            (K::UnsaturatedFatG, 4.0), (K::CholesterolMg, 40.0), (K::CalciumMg, 300.0), (K::RiboflavinMg, 0.25),
            (K::VitaminB12Mcg, 0.6), (K::VitaminDMcg, 1.2), (K::CaprylicG, 0.1), (K::CapricG, 0.2), (K::LauricG, 0.25),
            (K::SodiumMg, 200.0), (K::PhosphorusMg, 200.0), (K::NovaClass, 3.0),
        ]),
        Yogurt => set(&[
            (K::ProteinG, 5.0), (K::CarbohydrateG, 7.0), (K::FiberG, 0.0), (K::SaturatedFatG, 1.0),
            (K::UnsaturatedFatG, 0.6), (K::CalciumMg, 180.0), (K::RiboflavinMg, 0.2), (K::VitaminB12Mcg, 0.5),
            (K::Yogurt, 0.4), (K::FermentedPct, 100.0), (K::CaprylicG, 0.02), (K::CapricG, 0.04), (K::LauricG, 0.05),
            (K::SodiumMg, 70.0), (K::NovaClass, 1.0),
        ]),
        Sweet => set(&[
            (K::ProteinG, 5.0), (K::CarbohydrateG, 60.0), (K::FiberG, 1.5), (K::SaturatedFatG, 9.0),
            (K::UnsaturatedFatG, 11.0), (K::AddedSugarG, 28.0), (K::RefinedGrains, 1.2), (K::SodiumMg, 320.0),
            (K::CholesterolMg, 20.0), (K::NovaClass, 4.0),
        ]),
        FriedSnack => set(&[
            (K::ProteinG, 5.0), (K::CarbohydrateG, 50.0), (K::FiberG, 4.0), (K::SaturatedFatG, 3.5),
            (K::UnsaturatedFatG, 25.0), (K::SodiumMg, 500.0), (K::PotassiumMg, 1200.0), (K::PlantOilsG, 30.0),
            (K::VitaminEMg, 5.0), (K::FriedFlag, 1.0), (K::NovaClass, 4.0),
        ]),
        Beverage => set(&[
            (K::ProteinG, 0.0), (K::CarbohydrateG, 10.5), (K::FiberG, 0.0), (K::SaturatedFatG, 0.0),
            (K::UnsaturatedFatG, 0.0), (K::AddedSugarG, 10.5), (K::PotassiumMg, 2.0), (K::SodiumMg, 4.0),
            (K::CarotenoidsMcg, 0.0), (K::NovaClass, 4.0),
        ]),
    }
    v
}

const PATTERN_KEYS: &[TargetKey] = &[
    TargetKey::Fruits,
    TargetKey::NonstarchyVegetables,
    TargetKey::BeansLegumes,
    TargetKey::NutsSeeds,
    TargetKey::WholeGrains,
    TargetKey::RefinedGrains,
    TargetKey::TotalGrains,
    TargetKey::Seafood,
    TargetKey::Yogurt,
    TargetKey::RedMeat,
    TargetKey::CuredMeat,
    TargetKey::PlantOilsG,
    TargetKey::NovaClass,
    TargetKey::FermentedPct,
    TargetKey::FriedFlag,
];

fn nutrient_keys() -> Vec<TargetKey> {
    TargetKey::ALL
        .iter()
        .copied()
        .filter(|k| !PATTERN_KEYS.contains(k) && *k != TargetKey::FlavonoidsMg && *k != TargetKey::Calories)
        .collect()
}

struct Food {
    code: String,
    description: String,
    category: String,
    per_100g: BTreeMap<TargetKey, f64>,
}

fn make_food(i: usize, desc: &str, cat: &str, arch: Arch, rng: &mut ChaCha8Rng) -> Food {
    let mut v = base(arch);
    for (k, x) in v.iter_mut() {
        if k.is_amount() && *x > 0.0 {
            *x *= rng.gen_range(0.6..1.4);
            *x = (*x * 1e4).round() / 1e4;
        }
    }
    if desc.contains("fried") || desc.contains("fries") || desc.contains("doughnut") {
        v.insert(TargetKey::FriedFlag, 1.0);
    }
    if desc.contains("cheese") {
        v.insert(TargetKey::FermentedPct, 60.0);
    }
    let grains = v[&TargetKey::WholeGrains] + v[&TargetKey::RefinedGrains];
    v.insert(TargetKey::TotalGrains, (grains * 1e4).round() / 1e4);
    let fat = v[&TargetKey::SaturatedFatG] + v[&TargetKey::UnsaturatedFatG];
    let kcal = 4.0 * (v[&TargetKey::ProteinG] + v[&TargetKey::CarbohydrateG]) + 9.0 * fat;
    v.insert(TargetKey::Calories, (kcal.max(2.0) * 10.0).round() / 10.0);
    Food { code: format!("{}", 11000 + i * 7), description: desc.into(), category: cat.into(), per_100g: v }
}

fn csv_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic"));
    fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let scoring = ScoringConfig::default();

    let mut foods: Vec<Food> =
        FOODS.iter().enumerate().map(|(i, &(d, c, a))| make_food(i, d, c, a, &mut rng)).collect();

    // rows the ingest stage should drop
    let mut na = make_food(900, "pear, canned in syrup", "fruit", Fruit, &mut rng);
    na.code = "99001".into();
    let mut negative = make_food(901, "rye crackers", "grains", WholeGrain, &mut rng);
    negative.code = "99002".into();
    negative.per_100g.insert(TargetKey::IronMg, -1.2);
    let mut truck = make_food(902, "pickup truck", "other", Beverage, &mut rng);
    truck.code = "99003".into();
    let mut water = make_food(903, "sparkling water, unsweetened", "beverages", Beverage, &mut rng);
    water.code = "99004".into();
    water.per_100g.insert(TargetKey::Calories, 0.4);
    let defects = [na, negative, truck, water];

    let nkeys = nutrient_keys();
    let mut header = vec!["food_code".to_string(), "description".into(), "category".into(), "energy_kcal".into()];
    header.extend(nkeys.iter().map(|k| k.name().to_string()));
    let mut nutrient_rows = Vec::new();
    let mut pattern_rows = Vec::new();
    let mut flavonoid_rows = Vec::new();
    let mut score_rows = Vec::new();
    for f in foods.iter().chain(&defects) {
        let mut row = vec![f.code.clone(), f.description.clone(), f.category.clone(), num(f.per_100g[&TargetKey::Calories])];
        for k in &nkeys {
            row.push(if f.code == "99001" && *k == TargetKey::SodiumMg { "N/A".into() } else { num(f.per_100g[k]) });
        }
        nutrient_rows.push(row);
        let mut prow = vec![f.code.clone()];
        prow.extend(PATTERN_KEYS.iter().map(|k| num(f.per_100g[k])));
        pattern_rows.push(prow);
    }
    // every fifth food has no flavonoid entry and is imputed at ingest
    for (i, f) in foods.iter().enumerate() {
        if i % 5 != 4 {
            flavonoid_rows.push(vec![f.code.clone(), num(f.per_100g[&TargetKey::FlavonoidsMg])]);
        }
    }
    for (i, f) in foods.iter_mut().enumerate() {
        if i % 5 == 4 {
            f.per_100g.insert(TargetKey::FlavonoidsMg, 0.0);
        }
        let amounts = NutrientProfile::with_values(Basis::Per100g, f.per_100g.clone());
        let profile = normalize_per_100kcal(&amounts, f.per_100g[&TargetKey::Calories])?;
        let fcs = total_fcs(&profile, &f.description, &scoring)?.final_score;
        score_rows.push(vec![f.code.clone(), fcs.to_string()]);
    }

    csv_table(&out.join("nutrients.csv"), &header, &nutrient_rows)?;
    let mut pheader = vec!["food_code".to_string()];
    pheader.extend(PATTERN_KEYS.iter().map(|k| k.name().to_string()));
    csv_table(&out.join("food_patterns.csv"), &pheader, &pattern_rows)?;
    csv_table(&out.join("flavonoids.csv"), &["food_code".into(), "total_flavonoids_mg".into()], &flavonoid_rows)?;
    csv_table(&out.join("published_scores.csv"), &["food_code".into(), "fcs".into()], &score_rows)?;
    fs::write(out.join("pipeline.toml"), config_text(&nkeys))?;
    println!("wrote {} foods (+{} defective rows) to {}", foods.len(), defects.len(), out.display());
    Ok(())
}

/// A small-width config that trains every target in well under a minute.
fn config_text(nkeys: &[TargetKey]) -> String {
    let mut s = String::from(
        "# Config for the bundled synthetic corpus. Widths are tiny so the whole\n\
         # ingest -> train -> validate loop runs in seconds.\n\
         seed = 7\n\n\
         [paths]\n\
         dataset = \"out/dataset.jsonl\"\n\
         bundle = \"out/bundle\"\n\
         reports = \"out/reports\"\n\n\
         [featurizer]\n\
         embedding_dim = 32\n\
         tfidf_max_features = 128\n\n\
         [model]\n\
         hidden = [16]\n\
         head = [8, 1]\n\
         embedding_dim = 8\n\n\
         [train]\n\
         augment = true\n\
         max_epochs = 200\n\
         batch_size = 16\n\
         lr = 0.003\n\n",
    );
    s.push_str("[ingest.nutrients]\npath = \"nutrients.csv\"\n[ingest.nutrients.schema]\n");
    s.push_str("code_column = \"food_code\"\ndescription_column = \"description\"\ncategory_column = \"category\"\n");
    s.push_str("[ingest.nutrients.schema.columns]\ncalories = \"energy_kcal\"\n");
    for k in nkeys {
        s.push_str(&format!("{0} = \"{0}\"\n", k.name()));
    }
    s.push_str("\n[ingest.food_patterns]\npath = \"food_patterns.csv\"\n[ingest.food_patterns.schema]\ncode_column = \"food_code\"\n");
    s.push_str("[ingest.food_patterns.schema.columns]\n");
    for k in PATTERN_KEYS {
        s.push_str(&format!("{0} = \"{0}\"\n", k.name()));
    }
    s.push_str("\n[ingest.flavonoids]\npath = \"flavonoids.csv\"\n[ingest.flavonoids.schema]\ncode_column = \"food_code\"\n");
    s.push_str("[ingest.flavonoids.schema.columns]\nflavonoids_mg = \"total_flavonoids_mg\"\n");
    s.push_str("\n[ingest.published_scores]\npath = \"published_scores.csv\"\n[ingest.published_scores.schema]\ncode_column = \"food_code\"\n");
    s.push_str("[ingest.published_scores.schema.columns]\npublished_fcs = \"fcs\"\n");
    s
}
