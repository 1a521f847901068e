//! Profit maximization over the target yield.
//!
//! Leveling every conditional yield at a common target `ŷ` makes each input a
//! function of `ŷ` alone, so profit `π(ŷ) = p_w ŷ − Σ p_i x_i(ŷ)` is a
//! one-dimensional concave problem. The optimum is found by bisection on the
//! marginal profit, which is strictly decreasing and has a pole at the lowest
//! per-factor yield ceiling.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    conditional_yield, realized_yield, required_input, Decision, FarmSpec, ModelError, Prices, StressFactorParams,
};

/// Share of potential yield treated as the exploitable ceiling when
/// [`SolverSettings::cap_exploitable_yield`] is set.
pub const EXPLOITABLE_YIELD_SHARE: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid solver settings: {0}")]
    Settings(String),
    #[error("bisection did not converge in {iterations} iterations; last bracket [{lo}, {hi}]")]
    NotConverged { iterations: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Relative residual tolerance, scaled by the wheat price.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative back-off of the upper bracket from the pole.
    pub bracket_shrink: f64,
    /// Cap the target yield at 80% of potential yield. Off by default.
    pub cap_exploitable_yield: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 200, bracket_shrink: 1e-12, cap_exploitable_yield: false }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if !(self.tolerance > 0.0) {
            return Err(OptimizerError::Settings(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(OptimizerError::Settings("max_iterations must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.bracket_shrink) {
            return Err(OptimizerError::Settings(format!(
                "bracket_shrink must lie in [0, 1), got {}",
                self.bracket_shrink
            )));
        }
        Ok(())
    }
}

/// Root location returned by [`solve_target_yield`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetYield {
    pub value: f64,
    pub corner: bool,
    pub iterations: usize,
}

fn check_below_poles(farm: &FarmSpec, y_hat: f64) -> Result<(), OptimizerError> {
    let ceiling = farm.yield_ceiling();
    if y_hat.is_nan() || y_hat >= ceiling {
        return Err(
            ModelError::Domain(format!("target yield {y_hat} is at or beyond the singularity {ceiling}")).into()
        );
    }
    Ok(())
}

fn marginal_cost(f: &StressFactorParams, potential_yield: f64, y_hat: f64) -> f64 {
    f.input_price / (f.lambda * f.yield_ceiling(potential_yield) - f.lambda * y_hat)
}

/// First-order condition `p_w − Σ_i p_i / (λ_i(1 + s̄_i − s_i)ȳ − λ_i ŷ)`.
///
/// Every factor contributes, including those whose input would clamp to zero
/// at `y_hat`. Use [`marginal_profit`] for the exact derivative of profit.
pub fn foc_residual(farm: &FarmSpec, prices: &Prices, y_hat: f64) -> Result<f64, OptimizerError> {
    check_below_poles(farm, y_hat)?;
    let cost: f64 = farm.stress_factors.iter().map(|f| marginal_cost(f, farm.potential_yield, y_hat)).sum();
    Ok(prices.wheat_price - cost)
}

/// Right derivative of `π(ŷ)`: the first-order condition restricted to the
/// factors that need a positive input at `y_hat`.
///
/// Equal to [`foc_residual`] once `y_hat` is at or above every unmitigated
/// yield `ȳ(1 − s_i)`.
pub fn marginal_profit(farm: &FarmSpec, prices: &Prices, y_hat: f64) -> Result<f64, OptimizerError> {
    check_below_poles(farm, y_hat)?;
    let cost: f64 = farm
        .stress_factors
        .iter()
        .filter(|f| y_hat >= f.unmitigated_yield(farm.potential_yield))
        .map(|f| marginal_cost(f, farm.potential_yield, y_hat))
        .sum();
    Ok(prices.wheat_price - cost)
}

/// Analytic derivative of [`foc_residual`] with respect to `ŷ`.
pub fn foc_residual_slope(farm: &FarmSpec, y_hat: f64) -> Result<f64, OptimizerError> {
    check_below_poles(farm, y_hat)?;
    Ok(-farm
        .stress_factors
        .iter()
        .map(|f| {
            let d = f.lambda * f.yield_ceiling(farm.potential_yield) - f.lambda * y_hat;
            f.input_price * f.lambda / (d * d)
        })
        .sum::<f64>())
}

/// Upper end of the search bracket, backed off from the pole.
pub fn upper_bracket(farm: &FarmSpec, settings: &SolverSettings) -> f64 {
    let mut upper = farm.yield_ceiling() * (1.0 - settings.bracket_shrink);
    if settings.cap_exploitable_yield {
        upper = upper.min(EXPLOITABLE_YIELD_SHARE * farm.potential_yield);
    }
    upper
}

/// Finds the profit-maximizing target yield `ŷ*`.
pub fn solve_target_yield(
    farm: &FarmSpec,
    prices: &Prices,
    settings: &SolverSettings,
) -> Result<TargetYield, OptimizerError> {
    farm.validate()?;
    prices.validate()?;
    settings.validate()?;

    let lower = farm.zero_input_yield();
    let upper = upper_bracket(farm, settings);
    if upper <= lower {
        // the exploitable cap sits below the zero-input yield
        return Ok(TargetYield { value: lower, corner: true, iterations: 0 });
    }

    let r_lo = marginal_profit(farm, prices, lower)?;
    if r_lo <= 0.0 {
        return Ok(TargetYield { value: lower, corner: true, iterations: 0 });
    }
    let r_hi = marginal_profit(farm, prices, upper)?;
    if r_hi >= 0.0 {
        return Ok(TargetYield { value: upper, corner: true, iterations: 0 });
    }

    let stop = settings.tolerance * prices.wheat_price;
    let (mut lo, mut hi) = (lower, upper);
    for iteration in 1..=settings.max_iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket collapsed to adjacent floats, e.g. at a kink where a factor switches on
            return Ok(TargetYield { value: mid, corner: false, iterations: iteration });
        }
        let r = marginal_profit(farm, prices, mid)?;
        if r.abs() <= stop {
            return Ok(TargetYield { value: mid, corner: false, iterations: iteration });
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(OptimizerError::NotConverged { iterations: settings.max_iterations, lo, hi })
}

fn inputs_at(farm: &FarmSpec, y_hat: f64) -> Result<BTreeMap<String, f64>, OptimizerError> {
    farm.stress_factors.iter().map(|f| Ok((f.name.clone(), required_input(f, farm.potential_yield, y_hat)?))).collect()
}

/// Optimal target yield, the inputs that level every factor at it, and profit.
pub fn optimal_inputs(farm: &FarmSpec, prices: &Prices, settings: &SolverSettings) -> Result<Decision, OptimizerError> {
    let target = solve_target_yield(farm, prices, settings)?;
    let inputs = inputs_at(farm, target.value)?;
    let mut decision = Decision { target_yield: target.value, inputs, profit: 0.0, corner: target.corner };
    decision.profit = profit(&decision, farm, prices)?;
    Ok(decision)
}

/// Decision implied by a prescribed input mix: the realized yield becomes the target.
pub fn evaluate_inputs(
    farm: &FarmSpec,
    prices: &Prices,
    inputs: &BTreeMap<String, f64>,
) -> Result<Decision, OptimizerError> {
    farm.validate()?;
    prices.validate()?;
    let yields = farm.conditional_yields(inputs)?;
    let mut decision = Decision {
        target_yield: realized_yield(&yields)?,
        inputs: farm.stress_factors.iter().map(|f| (f.name.clone(), inputs[&f.name])).collect(),
        profit: 0.0,
        corner: false,
    };
    decision.profit = profit(&decision, farm, prices)?;
    Ok(decision)
}

/// Profit per hectare at a target yield with inputs recomputed to level on it.
pub fn profit_at_target(farm: &FarmSpec, prices: &Prices, y_hat: f64) -> Result<f64, OptimizerError> {
    let inputs = inputs_at(farm, y_hat)?;
    let cost: f64 = farm.stress_factors.iter().map(|f| f.input_price * inputs[&f.name]).sum();
    Ok(prices.wheat_price * y_hat - cost)
}

/// `π = p_w ŷ − Σ p_i x_i`.
pub fn profit(decision: &Decision, farm: &FarmSpec, prices: &Prices) -> Result<f64, OptimizerError> {
    let mut cost = 0.0;
    for f in &farm.stress_factors {
        let x = decision
            .inputs
            .get(&f.name)
            .copied()
            .ok_or_else(|| ModelError::Domain(format!("decision has no input for factor `{}`", f.name)))?;
        cost += f.input_price * x;
    }
    Ok(prices.wheat_price * decision.target_yield - cost)
}

/// Closed-form optimum of a single-factor farm, `(ŷ*, x*)`.
///
/// `ŷ* = (1 + s̄ − s)ȳ − p_x/(p_w λ)` and `x* = −ln(p_x/(p_w λ s̄ ȳ))/λ`. When the
/// log argument exceeds 1 the input does not pay for itself and the result
/// is the zero-input corner.
pub fn one_factor_solution(
    p: &StressFactorParams,
    potential_yield: f64,
    prices: &Prices,
) -> Result<(f64, f64), OptimizerError> {
    p.validate()?;
    prices.validate()?;
    if !(potential_yield > 0.0) {
        return Err(ModelError::Domain(format!("potential yield must be > 0, got {potential_yield}")).into());
    }
    let arg = p.input_price / (prices.wheat_price * p.lambda * p.s_bar * potential_yield);
    if !(arg > 0.0) {
        return Err(ModelError::Domain(format!("closed form needs a positive input price (log argument {arg})")).into());
    }
    if arg > 1.0 {
        return Ok((p.unmitigated_yield(potential_yield), 0.0));
    }
    let y = p.yield_ceiling(potential_yield) - p.input_price / (prices.wheat_price * p.lambda);
    let x = -arg.ln() / p.lambda;
    Ok((y, x))
}

/// Realized-yield spread of a decision over the factors that receive input.
///
/// Factors left at zero input are slack: their conditional yield sits at or
/// above the target.
pub fn leveling_spread(decision: &Decision, farm: &FarmSpec) -> Result<f64, OptimizerError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in &farm.stress_factors {
        let x = decision.inputs.get(&f.name).copied().unwrap_or(0.0);
        if x > 0.0 {
            let y = conditional_yield(f, farm.potential_yield, x)?;
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    Ok(if lo.is_finite() { hi - lo } else { 0.0 })
}
