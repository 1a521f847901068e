//! Life-cycle inventory expansion and impact assessment.
//!
//! Process datasets form an acyclic technosphere graph whose expansion yields
//! an [`InventoryVector`] of elementary flows. Impact methods characterize
//! that inventory to a midpoint score and convert it to an endpoint damage
//! (DALY for human health, species.year for ecosystems, USD for resources).

mod database;
mod impact;
mod inventory;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use database::{CfDatabase, MethodSelection};
pub use impact::{
    assess, characterize_midpoint, midpoint_to_endpoint, rank_impacts, regionalize, Characterized, ImpactResult,
    ImpactRow, RankedCategory,
};
pub use inventory::{expand_inventory, ProcessDataset, ProcessDb};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LcaError {
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("technosphere cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("invalid process `{process}`: {reason}")]
    InvalidProcess { process: String, reason: String },
    #[error("invalid inventory: {0}")]
    InvalidInventory(String),
    #[error("method configuration error in `{method}`: {reason}")]
    Configuration { method: String, reason: String },
    #[error("unknown impact method `{0}`")]
    UnknownMethod(String),
    #[error("method `{0}` has no country-specific factors and cannot be regionalized")]
    NotRegionalizable(String),
    #[error(
        "regionalization of `{method}` failed for {flow}: global factor is zero but regional factor is {regional}"
    )]
    Regionalization { method: String, flow: ElementaryFlow, regional: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

macro_rules! labelled_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $label:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label $(, alias = $alias)*)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }

        impl FromStr for $name {
            type Err = LcaError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let t = s.trim();
                $(
                    if t.eq_ignore_ascii_case($label) $(|| t.eq_ignore_ascii_case($alias))* {
                        return Ok($name::$variant);
                    }
                )+
                Err(LcaError::Parse(format!(concat!("unknown ", stringify!($name), " `{}`"), t)))
            }
        }
    };
}

labelled_enum!(
    /// Environmental compartment receiving an emission.
    Compartment {
        Air => "air",
        UrbanAir => "urban air" | "urban_air",
        Soil => "soil",
        IndustrialSoil => "industrial soil" | "industrial_soil",
        Freshwater => "freshwater",
        MarineWater => "marine water" | "marine_water" | "marine",
    }
);

labelled_enum!(
    /// Area of protection an endpoint damage belongs to.
    DamageCategory {
        HumanHealth => "human health" | "human_health",
        EcosystemQuality => "ecosystem quality" | "ecosystem_quality" | "ecosystems",
        ResourceScarcity => "resource scarcity" | "resource_scarcity" | "resources",
    }
);

labelled_enum!(
    Geography {
        Global => "Global",
        Italy => "Italy",
    }
);

labelled_enum!(
    /// Cultural perspective; mainly a choice of time horizon (20/100/500 years).
    Perspective {
        Individualist => "Individualist" | "I",
        Hierarchist => "Hierarchist" | "H",
        Egalitarian => "Egalitarian" | "E",
    }
);

labelled_enum!(
    EndpointUnit {
        Daly => "DALY",
        SpeciesYear => "species.year",
        Usd => "USD",
    }
);

impl DamageCategory {
    pub fn endpoint_unit(self) -> EndpointUnit {
        match self {
            DamageCategory::HumanHealth => EndpointUnit::Daly,
            DamageCategory::EcosystemQuality => EndpointUnit::SpeciesYear,
            DamageCategory::ResourceScarcity => EndpointUnit::Usd,
        }
    }
}

impl Perspective {
    pub fn horizon_years(self) -> u32 {
        match self {
            Perspective::Individualist => 20,
            Perspective::Hierarchist => 100,
            Perspective::Egalitarian => 500,
        }
    }
}

/// A substance released to (or taken from) one compartment, measured in kg.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElementaryFlow {
    pub substance: String,
    pub compartment: Compartment,
}

impl ElementaryFlow {
    pub fn new(substance: impl Into<String>, compartment: Compartment) -> Self {
        Self { substance: substance.into(), compartment }
    }
}

impl fmt::Display for ElementaryFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.substance, self.compartment)
    }
}

/// Serde helper: maps keyed by [`ElementaryFlow`] travel as lists of entries.
pub(crate) mod flow_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        substance: String,
        compartment: Compartment,
        value: f64,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<ElementaryFlow, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(k, &value)| Entry {
            substance: k.substance.clone(),
            compartment: k.compartment,
            value,
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<ElementaryFlow, f64>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (ElementaryFlow::new(e.substance, e.compartment), e.value)).collect())
    }
}

/// Quantities of elementary flows, kg. Addition is component-wise.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InventoryVector {
    #[serde(with = "flow_map")]
    pub flows: BTreeMap<ElementaryFlow, f64>,
}

impl InventoryVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `quantity` to `flow`. Zero quantities leave the vector untouched.
    pub fn add(&mut self, flow: ElementaryFlow, quantity: f64) {
        if quantity != 0.0 {
            *self.flows.entry(flow).or_insert(0.0) += quantity;
        }
    }

    pub fn get(&self, flow: &ElementaryFlow) -> f64 {
        self.flows.get(flow).copied().unwrap_or(0.0)
    }

    pub fn merge(&mut self, other: &InventoryVector) {
        for (flow, &q) in &other.flows {
            self.add(flow.clone(), q);
        }
    }

    pub fn scaled(&self, factor: f64) -> InventoryVector {
        if factor == 0.0 {
            return InventoryVector::new();
        }
        InventoryVector { flows: self.flows.iter().map(|(f, &q)| (f.clone(), q * factor)).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ElementaryFlow, f64)> {
        self.flows.iter().map(|(f, &q)| (f, q))
    }

    pub fn validate(&self) -> Result<(), LcaError> {
        for (flow, &q) in &self.flows {
            if !(q.is_finite() && q >= 0.0) {
                return Err(LcaError::InvalidInventory(format!("{flow} has quantity {q}")));
            }
        }
        Ok(())
    }
}

impl std::ops::Add for &InventoryVector {
    type Output = InventoryVector;

    fn add(self, rhs: &InventoryVector) -> InventoryVector {
        let mut out = self.clone();
        out.merge(rhs);
        out
    }
}

impl FromIterator<(ElementaryFlow, f64)> for InventoryVector {
    fn from_iter<T: IntoIterator<Item = (ElementaryFlow, f64)>>(iter: T) -> Self {
        let mut inv = InventoryVector::new();
        for (f, q) in iter {
            inv.add(f, q);
        }
        inv
    }
}

/// Identity of an impact method: its name plus the damage target it reports on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodKey {
    pub name: String,
    pub target: String,
}

impl MethodKey {
    pub fn new(name: impl Into<String>, target: impl Into<String>) -> Self {
        Self { name: name.into(), target: target.into() }
    }
}

impl fmt::Display for MethodKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.name, self.target)
    }
}

/// One impact assessment method with its characterization factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactMethodSpec {
    pub name: String,
    /// Free-text damage target, e.g. "Humans - Carcinogenic".
    pub target: String,
    pub damage_category: DamageCategory,
    pub geography: Geography,
    pub perspective: Perspective,
    /// e.g. "kg CO2-eq".
    pub midpoint_unit: String,
    pub endpoint_unit: EndpointUnit,
    /// Compartment the method's pesticide emissions are booked to.
    pub emitted_to: Option<Compartment>,
    /// Midpoint-equivalent kg per kg of flow.
    #[serde(with = "flow_map")]
    pub midpoint_cfs: BTreeMap<ElementaryFlow, f64>,
    /// Endpoint units per midpoint unit.
    pub mid_to_end_factor: f64,
}

impl ImpactMethodSpec {
    pub fn key(&self) -> MethodKey {
        MethodKey::new(self.name.clone(), self.target.clone())
    }

    pub fn validate(&self) -> Result<(), LcaError> {
        let bad = |reason: String| LcaError::Configuration { method: self.key().to_string(), reason };
        if self.endpoint_unit != self.damage_category.endpoint_unit() {
            return Err(bad(format!(
                "endpoint unit {} does not match damage category {}",
                self.endpoint_unit, self.damage_category
            )));
        }
        if !(self.mid_to_end_factor >= 0.0 && self.mid_to_end_factor.is_finite()) {
            return Err(bad(format!("mid-to-end factor {} must be >= 0", self.mid_to_end_factor)));
        }
        for (flow, &cf) in &self.midpoint_cfs {
            if !(cf >= 0.0 && cf.is_finite()) {
                return Err(bad(format!("characterization factor {cf} for {flow} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Whether country-specific factors exist for this impact category.
    pub fn is_regionalizable(&self) -> bool {
        let n = self.name.to_ascii_lowercase();
        ["particulate matter", "fine dust", "ozone formation", "terrestrial acidification", "freshwater eutrophication"]
            .iter()
            .any(|k| n.contains(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enum_labels_round_trip() {
        for c in Compartment::ALL {
            assert_eq!(c.label().parse::<Compartment>().unwrap(), *c);
        }
        assert_eq!("industrial_soil".parse::<Compartment>().unwrap(), Compartment::IndustrialSoil);
        assert_eq!("H".parse::<Perspective>().unwrap(), Perspective::Hierarchist);
        assert!("lake".parse::<Compartment>().is_err());
        assert_eq!(Perspective::Egalitarian.horizon_years(), 500);
    }

    #[test]
    fn inventory_addition_is_componentwise() {
        let co2 = ElementaryFlow::new("Carbon dioxide", Compartment::Air);
        let nox = ElementaryFlow::new("Nitrogen oxides", Compartment::Air);
        let a: InventoryVector = [(co2.clone(), 1.0), (nox.clone(), 2.0)].into_iter().collect();
        let b: InventoryVector = [(co2.clone(), 3.0)].into_iter().collect();
        let c = &a + &b;
        assert_eq!(c.get(&co2), 4.0);
        assert_eq!(c.get(&nox), 2.0);
        assert!(a.scaled(0.0).is_empty());
    }

    #[test]
    fn unit_must_follow_category() {
        let m = ImpactMethodSpec {
            name: "Global Warming".into(),
            target: "Humans".into(),
            damage_category: DamageCategory::HumanHealth,
            geography: Geography::Global,
            perspective: Perspective::Hierarchist,
            midpoint_unit: "kg CO2-eq".into(),
            endpoint_unit: EndpointUnit::SpeciesYear,
            emitted_to: None,
            midpoint_cfs: BTreeMap::new(),
            mid_to_end_factor: 1.0,
        };
        assert!(matches!(m.validate(), Err(LcaError::Configuration { .. })));
    }
}
