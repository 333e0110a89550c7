//! Shared domain types: the closed target registry, nutrient profiles and
//! food records.
//!
//! All scored quantities travel on a per-100-kcal basis. The one exception
//! inside a profile is `calories`, which always holds energy density in
//! kcal per 100 g so that the energy of a food stays recoverable after
//! normalization.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! targets {
    ($( $variant:ident => $name:literal, $unit:ident, $group:ident, $dim:literal; )*) => {
        /// One prediction target. Declaration order is the registry order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum TargetKey {
            $( $variant, )*
        }

        impl TargetKey {
            pub const ALL: &'static [TargetKey] = &[$( TargetKey::$variant, )*];

            pub fn name(self) -> &'static str {
                match self {
                    $( TargetKey::$variant => $name, )*
                }
            }

            pub fn unit(self) -> Unit {
                match self {
                    $( TargetKey::$variant => Unit::$unit, )*
                }
            }

            pub fn group(self) -> TargetGroup {
                match self {
                    $( TargetKey::$variant => TargetGroup::$group, )*
                }
            }

            pub fn default_embedding_dim(self) -> usize {
                match self {
                    $( TargetKey::$variant => $dim, )*
                }
            }
        }

        impl FromStr for TargetKey {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $( $name => Ok(TargetKey::$variant), )*
                    other => Err(Error::UnknownTarget(other.to_string())),
                }
            }
        }
    };
}

targets! {
    Calories => "calories", Kcal, Macronutrient, 512;
    ProteinG => "protein_g", Gram, Macronutrient, 512;
    CarbohydrateG => "carbohydrate_g", Gram, Macronutrient, 512;
    FiberG => "fiber_g", Gram, Macronutrient, 256;
    SaturatedFatG => "saturated_fat_g", Gram, Lipid, 256;
    UnsaturatedFatG => "unsaturated_fat_g", Gram, Lipid, 256;
    CholesterolMg => "cholesterol_mg", Milligram, Lipid, 256;
    EpaG => "epa_g", Gram, Lipid, 128;
    DhaG => "dha_g", Gram, Lipid, 128;
    AlaG => "ala_g", Gram, Lipid, 128;
    CaprylicG => "caprylic_g", Gram, Lipid, 128;
    CapricG => "capric_g", Gram, Lipid, 128;
    LauricG => "lauric_g", Gram, Lipid, 128;
    AddedSugarG => "added_sugar_g", Gram, Macronutrient, 256;
    FlavonoidsMg => "flavonoids_mg", Milligram, Phytochemical, 128;
    CarotenoidsMcg => "carotenoids_mcg", Microgram, Phytochemical, 256;
    VitaminARaeMcg => "vitamin_a_rae_mcg", Microgram, Vitamin, 256;
    ThiaminMg => "thiamin_mg", Milligram, Vitamin, 256;
    RiboflavinMg => "riboflavin_mg", Milligram, Vitamin, 256;
    NiacinMg => "niacin_mg", Milligram, Vitamin, 256;
    VitaminB6Mg => "vitamin_b6_mg", Milligram, Vitamin, 256;
    FolateDfeMcg => "folate_dfe_mcg", Microgram, Vitamin, 256;
    VitaminB12Mcg => "vitamin_b12_mcg", Microgram, Vitamin, 256;
    VitaminCMg => "vitamin_c_mg", Milligram, Vitamin, 256;
    VitaminDMcg => "vitamin_d_mcg", Microgram, Vitamin, 256;
    VitaminEMg => "vitamin_e_mg", Milligram, Vitamin, 256;
    VitaminKMcg => "vitamin_k_mcg", Microgram, Vitamin, 256;
    CholineMg => "choline_mg", Milligram, Vitamin, 256;
    CalciumMg => "calcium_mg", Milligram, Mineral, 256;
    IronMg => "iron_mg", Milligram, Mineral, 256;
    MagnesiumMg => "magnesium_mg", Milligram, Mineral, 256;
    PhosphorusMg => "phosphorus_mg", Milligram, Mineral, 256;
    PotassiumMg => "potassium_mg", Milligram, Mineral, 256;
    ZincMg => "zinc_mg", Milligram, Mineral, 256;
    CopperMg => "copper_mg", Milligram, Mineral, 256;
    SeleniumMcg => "selenium_mcg", Microgram, Mineral, 256;
    SodiumMg => "sodium_mg", Milligram, Mineral, 512;
    Fruits => "fruits", CupEq, Ingredient, 256;
    NonstarchyVegetables => "nonstarchy_vegetables", CupEq, Ingredient, 256;
    BeansLegumes => "beans_legumes", CupEq, Ingredient, 256;
    NutsSeeds => "nuts_seeds", OzEq, Ingredient, 256;
    WholeGrains => "whole_grains", OzEq, Ingredient, 256;
    RefinedGrains => "refined_grains", OzEq, Ingredient, 256;
    TotalGrains => "total_grains", OzEq, Ingredient, 256;
    Seafood => "seafood", OzEq, Ingredient, 1024;
    Yogurt => "yogurt", CupEq, Ingredient, 128;
    RedMeat => "red_meat", OzEq, Ingredient, 512;
    CuredMeat => "cured_meat", OzEq, Ingredient, 512;
    PlantOilsG => "plant_oils_g", Gram, Ingredient, 256;
    NovaClass => "nova_class", NovaClass, Processing, 512;
    FermentedPct => "fermented_pct", Percent, Processing, 128;
    FriedFlag => "fried_flag", Flag, Processing, 128;
}

impl TargetKey {
    /// True for quantities that scale with the amount of food and are
    /// therefore rescaled when moving between the per-100 g and
    /// per-100 kcal bases.
    pub fn is_amount(self) -> bool {
        !matches!(
            self,
            TargetKey::Calories | TargetKey::NovaClass | TargetKey::FermentedPct | TargetKey::FriedFlag
        )
    }

    /// Processing attributes: categorical or bounded, never scaled by
    /// portion qualifiers.
    pub fn is_categorical(self) -> bool {
        matches!(self, TargetKey::NovaClass | TargetKey::FermentedPct | TargetKey::FriedFlag)
    }
}

impl fmt::Display for TargetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Kcal,
    Gram,
    Milligram,
    Microgram,
    CupEq,
    OzEq,
    NovaClass,
    Percent,
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetGroup {
    Macronutrient,
    Lipid,
    Phytochemical,
    Vitamin,
    Mineral,
    Ingredient,
    Processing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub key: TargetKey,
    pub unit: Unit,
    pub embedding_dim: usize,
}

/// The closed target registry in declaration order.
pub fn target_registry() -> Vec<TargetInfo> {
    TargetKey::ALL
        .iter()
        .map(|&key| TargetInfo { key, unit: key.unit(), embedding_dim: key.default_embedding_dim() })
        .collect()
}

pub fn lookup_target(name: &str) -> Result<TargetKey> {
    name.parse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    #[serde(rename = "per_100g")]
    Per100g,
    #[serde(rename = "per_100kcal")]
    Per100kcal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NutrientProfile {
    #[serde(rename = "profile")]
    pub values: BTreeMap<TargetKey, f64>,
    pub basis: Basis,
}

impl NutrientProfile {
    pub fn new(basis: Basis) -> Self {
        NutrientProfile { values: BTreeMap::new(), basis }
    }

    pub fn with_values(basis: Basis, values: impl IntoIterator<Item = (TargetKey, f64)>) -> Self {
        NutrientProfile { values: values.into_iter().collect(), basis }
    }

    /// A complete profile with every registered target set to zero.
    pub fn zeros(basis: Basis) -> Self {
        Self::with_values(basis, TargetKey::ALL.iter().map(|&k| (k, 0.0)))
    }

    pub fn get(&self, key: TargetKey) -> Option<f64> {
        self.values.get(&key).copied()
    }

    pub fn require(&self, key: TargetKey) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::MissingTarget(key.name().to_string()))
    }

    pub fn set(&mut self, key: TargetKey, value: f64) {
        self.values.insert(key, value);
    }

    pub fn is_complete(&self) -> bool {
        TargetKey::ALL.iter().all(|k| self.values.contains_key(k))
    }
}

/// Marks a record produced by the augmentation stage and how it was made.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_index: usize,
    pub transform: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodRecord {
    pub food_code: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_fcs: Option<u8>,
    #[serde(flatten)]
    pub profile: NutrientProfile,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flavonoid_imputed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmented: Option<Provenance>,
}

impl FoodRecord {
    pub fn new(food_code: impl Into<String>, description: impl Into<String>, profile: NutrientProfile) -> Self {
        FoodRecord {
            food_code: food_code.into(),
            description: description.into(),
            category: None,
            published_fcs: None,
            profile,
            flavonoid_imputed: false,
            augmented: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.description.trim().is_empty() {
            return Err(Error::Invariant(format!("record {} has an empty description", self.food_code)));
        }
        if let Some(fcs) = self.published_fcs {
            if !(1..=100).contains(&fcs) {
                return Err(Error::Invariant(format!("published score {fcs} outside 1..=100")));
            }
        }
        Ok(())
    }
}
