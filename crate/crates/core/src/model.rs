//! Domain types and conditional-yield mathematics.
//!
//! Each stress factor `i` is relieved by one dedicated input. With potential
//! yield `ȳ`, unmitigated loss share `s`, recoverable share `s̄` and
//! effectiveness rate `λ`, the yield obtained when only factor `i` binds is
//!
//! ```text
//! y_i(x) = ȳ · [(1 − s) + s̄ · (1 − e^(−λ x))]
//! ```
//!
//! and the realized yield is the Leontief minimum over all factors.
//! All quantities are per hectare.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter `{field}` = {value} for factor `{factor}`: {reason}")]
    InvalidParameter { factor: String, field: &'static str, value: f64, reason: &'static str },
    #[error("target yield {target} is unreachable for factor `{factor}` (ceiling {ceiling})")]
    InfeasibleTarget { factor: String, target: f64, ceiling: f64 },
    #[error("invalid farm `{farm_id}`: {reason}")]
    InvalidFarm { farm_id: String, reason: String },
}

/// Response parameters of one stress factor plus the price of the input that relieves it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressFactorParams {
    pub name: String,
    /// Share of potential yield lost when the stress is left unmitigated.
    pub s: f64,
    /// Maximum share of potential yield recoverable by the input.
    pub s_bar: f64,
    /// Effectiveness per unit of input.
    pub lambda: f64,
    /// Currency per unit of input.
    pub input_price: f64,
    pub input_unit: String,
}

impl StressFactorParams {
    pub fn new(name: impl Into<String>, s: f64, s_bar: f64, lambda: f64, input_price: f64) -> Self {
        Self { name: name.into(), s, s_bar, lambda, input_price, input_unit: "kg/ha".to_string() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad =
            |field, value, reason| ModelError::InvalidParameter { factor: self.name.clone(), field, value, reason };
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(bad("s", self.s, "must lie in (0, 1)"));
        }
        if !(self.s_bar > 0.0 && self.s_bar <= 1.0) {
            return Err(bad("s_bar", self.s_bar, "must lie in (0, 1]"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(bad("lambda", self.lambda, "must be positive and finite"));
        }
        if !(self.input_price >= 0.0 && self.input_price.is_finite()) {
            return Err(bad("input_price", self.input_price, "must be non-negative and finite"));
        }
        Ok(())
    }

    /// Yield with zero input, `ȳ(1 − s)`.
    pub fn unmitigated_yield(&self, potential_yield: f64) -> f64 {
        potential_yield * (1.0 - self.s)
    }

    /// Supremum of the conditional yield, `ȳ(1 + s̄ − s)`. Never attained.
    pub fn yield_ceiling(&self, potential_yield: f64) -> f64 {
        potential_yield * (1.0 + self.s_bar - self.s)
    }
}

/// Market prices. Input prices live on each [`StressFactorParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prices {
    /// Currency per tonne of wheat.
    pub wheat_price: f64,
}

impl Prices {
    pub fn new(wheat_price: f64) -> Result<Self, ModelError> {
        let p = Self { wheat_price };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.wheat_price > 0.0 && self.wheat_price.is_finite()) {
            return Err(ModelError::Domain(format!(
                "wheat price must be positive and finite, got {}",
                self.wheat_price
            )));
        }
        Ok(())
    }
}

/// The unit of decision making: one farm's agronomic setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmSpec {
    pub farm_id: String,
    /// t/ha
    pub potential_yield: f64,
    pub stress_factors: Vec<StressFactorParams>,
    /// ha
    pub hectares: f64,
    /// MJ/ha
    pub tractor_energy: f64,
}

impl FarmSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |reason: String| ModelError::InvalidFarm { farm_id: self.farm_id.clone(), reason };
        if !(self.potential_yield > 0.0 && self.potential_yield.is_finite()) {
            return Err(invalid(format!("potential yield must be positive, got {}", self.potential_yield)));
        }
        if !(self.hectares > 0.0 && self.hectares.is_finite()) {
            return Err(invalid(format!("hectares must be positive, got {}", self.hectares)));
        }
        if !(self.tractor_energy >= 0.0 && self.tractor_energy.is_finite()) {
            return Err(invalid(format!("tractor energy must be non-negative, got {}", self.tractor_energy)));
        }
        if self.stress_factors.is_empty() {
            return Err(invalid("at least one stress factor is required".into()));
        }
        let mut seen = BTreeSet::new();
        for f in &self.stress_factors {
            f.validate()?;
            if !seen.insert(f.name.as_str()) {
                return Err(invalid(format!("duplicate stress factor `{}`", f.name)));
            }
        }
        Ok(())
    }

    pub fn factor(&self, name: &str) -> Option<&StressFactorParams> {
        self.stress_factors.iter().find(|f| f.name == name)
    }

    /// Realized yield with no inputs at all: `min_i ȳ(1 − s_i)`.
    pub fn zero_input_yield(&self) -> f64 {
        self.stress_factors.iter().map(|f| f.unmitigated_yield(self.potential_yield)).fold(f64::INFINITY, f64::min)
    }

    /// Smallest per-factor yield ceiling `min_i ȳ(1 + s̄_i − s_i)`.
    pub fn yield_ceiling(&self) -> f64 {
        self.stress_factors.iter().map(|f| f.yield_ceiling(self.potential_yield)).fold(f64::INFINITY, f64::min)
    }

    /// Conditional yield of every factor at the given per-factor inputs.
    pub fn conditional_yields(&self, inputs: &BTreeMap<String, f64>) -> Result<Vec<f64>, ModelError> {
        self.stress_factors
            .iter()
            .map(|f| {
                let x = inputs
                    .get(&f.name)
                    .copied()
                    .ok_or_else(|| ModelError::Domain(format!("no input quantity for factor `{}`", f.name)))?;
                conditional_yield(f, self.potential_yield, x)
            })
            .collect()
    }
}

/// Output of the optimizer for one farm, per hectare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// Target yield, t/ha.
    pub target_yield: f64,
    /// Input quantity per stress factor name.
    pub inputs: BTreeMap<String, f64>,
    /// Currency per hectare.
    pub profit: f64,
    /// Set when the optimum sits on a bracket boundary.
    pub corner: bool,
}

pub fn conditional_yield(p: &StressFactorParams, potential_yield: f64, x: f64) -> Result<f64, ModelError> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(ModelError::Domain(format!("input quantity must be >= 0, got {x}")));
    }
    if !(potential_yield > 0.0) {
        return Err(ModelError::Domain(format!("potential yield must be > 0, got {potential_yield}")));
    }
    let recovered = -(-p.lambda * x).exp_m1();
    Ok(potential_yield * ((1.0 - p.s) + p.s_bar * recovered))
}

/// Input quantity that brings the factor's conditional yield to `target`.
///
/// Targets at or below the unmitigated yield need no input and return 0.
pub fn required_input(p: &StressFactorParams, potential_yield: f64, target: f64) -> Result<f64, ModelError> {
    if !(potential_yield > 0.0) {
        return Err(ModelError::Domain(format!("potential yield must be > 0, got {potential_yield}")));
    }
    if target.is_nan() {
        return Err(ModelError::Domain("target yield is NaN".into()));
    }
    let ceiling = p.yield_ceiling(potential_yield);
    if target >= ceiling {
        return Err(ModelError::InfeasibleTarget { factor: p.name.clone(), target, ceiling });
    }
    if target <= p.unmitigated_yield(potential_yield) {
        return Ok(0.0);
    }
    let ratio = (ceiling - target) / (p.s_bar * potential_yield);
    Ok((-ratio.ln() / p.lambda).max(0.0))
}

/// Leontief composition: the most binding factor sets the yield.
pub fn realized_yield(conditional_yields: &[f64]) -> Result<f64, ModelError> {
    if conditional_yields.is_empty() {
        return Err(ModelError::Domain("no conditional yields supplied".into()));
    }
    Ok(conditional_yields.iter().copied().fold(f64::INFINITY, f64::min))
}
