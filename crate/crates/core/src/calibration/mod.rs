//! Estimation of stress-response curves from farm observations.
//!
//! Pipeline per stress factor: convex hull of the `(input, yield)` cloud,
//! its north-west (best-practice) portion, optional peeling when that
//! portion is too thin, and a bounded least-squares fit of the conditional
//! yield curve to the accumulated frontier.

mod fit;
mod hull;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{fit_conditional_yield, seed_grid, sum_of_squares, CurveParams, FrontierFit};
pub use hull::{
    convex_hull, cross, distinct_points, nw_frontier, on_segment, pareto_undominated, peel_frontier, PeeledFrontier,
    Point, DEFAULT_MIN_FRONTIER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("insufficient data: need {needed} points, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("fit failed: {reason}")]
    FitFailed { reason: String, best: Option<Box<FrontierFit>> },
}

/// Observations of one input against yield, within one stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub stratum: String,
    pub points: Vec<Point>,
}

impl ObservationSet {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        for p in &self.points {
            if !(p.x.is_finite() && p.y.is_finite()) || p.x < 0.0 || p.y <= 0.0 {
                return Err(CalibrationError::InvalidObservation(format!(
                    "({}, {}) in stratum `{}`: need finite x >= 0 and y > 0",
                    p.x, p.y, self.stratum
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub min_frontier: usize,
    /// Known potential yield; estimated from the data when absent.
    pub potential_yield: Option<f64>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self { min_frontier: DEFAULT_MIN_FRONTIER, potential_yield: None }
    }
}

/// Hull, frontier, peeling and fit for one factor.
pub fn calibrate_factor(
    name: &str,
    set: &ObservationSet,
    options: &CalibrationOptions,
) -> Result<FrontierFit, CalibrationError> {
    set.validate()?;
    let distinct = distinct_points(&set.points)?;
    if distinct.is_empty() {
        return Err(CalibrationError::InsufficientData { needed: options.min_frontier, available: 0 });
    }
    if distinct.len() < 3 && set.points.len() >= 3 {
        return Err(CalibrationError::Degenerate(format!(
            "only {} distinct points among {} observations",
            distinct.len(),
            set.points.len()
        )));
    }
    let peeled = peel_frontier(&set.points, options.min_frontier)?;
    let mut fit = fit_conditional_yield(&peeled.points, options.potential_yield)?;
    fit.params.name = name.to_string();
    fit.peel_rounds = peeled.rounds;
    Ok(fit)
}

/// Calibrates every factor of one stratum.
///
/// When no potential yield is supplied each factor is first fitted freely,
/// and all factors are then refitted against the largest of those estimates
/// so the stratum shares a single potential yield.
pub fn calibrate_farm_stratum(
    sets: &BTreeMap<String, ObservationSet>,
    options: &CalibrationOptions,
) -> BTreeMap<String, Result<FrontierFit, CalibrationError>> {
    let first: BTreeMap<String, Result<FrontierFit, CalibrationError>> =
        sets.iter().map(|(name, set)| (name.clone(), calibrate_factor(name, set, options))).collect();
    if options.potential_yield.is_some() {
        return first;
    }
    let shared = first
        .values()
        .filter_map(|r| r.as_ref().ok())
        .map(|f| f.potential_yield)
        .fold(None, |acc: Option<f64>, y| Some(acc.map_or(y, |a| a.max(y))));
    let Some(shared) = shared else {
        return first;
    };
    let pinned = CalibrationOptions { potential_yield: Some(shared), ..*options };
    first
        .into_iter()
        .map(|(name, result)| {
            let refit = match result {
                Ok(_) => {
                    let mut fit = calibrate_factor(&name, &sets[&name], &pinned);
                    if let Ok(f) = fit.as_mut() {
                        f.potential_yield_fitted = true;
                    }
                    fit
                }
                Err(e) => Err(e),
            };
            (name, refit)
        })
        .collect()
}
