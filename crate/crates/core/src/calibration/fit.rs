//! Least-squares fit of the conditional-yield curve to frontier points.
//!
//! A fixed seed grid over `(s, s̄, λ)` is scanned first; the best seeds are
//! then refined with a projected Levenberg–Marquardt iteration that respects
//! the parameter box. Everything is deterministic for identical input.

use serde::{Deserialize, Serialize};

use super::hull::Point;
use super::CalibrationError;
use crate::model::StressFactorParams;

const S_MIN: f64 = 1e-9;
const S_MAX: f64 = 1.0 - 1e-9;
const S_BAR_MIN: f64 = 1e-9;
const S_BAR_MAX: f64 = 1.0;
const LAMBDA_MIN: f64 = 1e-6;
const LAMBDA_MAX: f64 = 100.0;

/// Seeds refined after the grid scan.
const REFINED_SEEDS: usize = 8;
const MAX_LM_ITERATIONS: usize = 500;

/// Curve parameters in the order `(s, s̄, λ)`.
pub type CurveParams = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierFit {
    /// Fitted response; the input price is left at zero.
    pub params: StressFactorParams,
    pub potential_yield: f64,
    /// Whether `potential_yield` was estimated rather than supplied.
    pub potential_yield_fitted: bool,
    pub frontier_points: Vec<Point>,
    pub rss: f64,
    pub peel_rounds: usize,
    pub lm_iterations: usize,
}

impl FrontierFit {
    /// `(x, fitted y)` pairs on an even grid over `[0, x_max]`.
    pub fn curve_samples(&self, x_max: f64, count: usize) -> Vec<(f64, f64)> {
        let n = count.max(2);
        (0..n)
            .map(|i| {
                let x = x_max * i as f64 / (n - 1) as f64;
                (x, curve(self.potential_yield, &[self.params.s, self.params.s_bar, self.params.lambda], x))
            })
            .collect()
    }
}

fn curve(yb: f64, p: &CurveParams, x: f64) -> f64 {
    yb * ((1.0 - p[0]) + p[1] * -(-p[2] * x).exp_m1())
}

/// Residual sum of squares of the curve `(ȳ, s, s̄, λ)` against `points`.
pub fn sum_of_squares(points: &[Point], potential_yield: f64, params: &CurveParams) -> f64 {
    points
        .iter()
        .map(|p| {
            let r = p.y - curve(potential_yield, params, p.x);
            r * r
        })
        .sum()
}

/// The fixed seed grid over `(s, s̄, λ)`.
pub fn seed_grid() -> Vec<CurveParams> {
    let s_values = [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95];
    let s_bar_values = [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95, 1.0];
    let lambda_values: Vec<f64> = (0..17).map(|k| 10f64.powf(-3.0 + 0.25 * k as f64)).collect();
    let mut grid = Vec::with_capacity(s_values.len() * s_bar_values.len() * lambda_values.len());
    for &s in &s_values {
        for &sb in &s_bar_values {
            for &l in &lambda_values {
                grid.push([s, sb, l]);
            }
        }
    }
    grid
}

fn project(p: CurveParams) -> CurveParams {
    [p[0].clamp(S_MIN, S_MAX), p[1].clamp(S_BAR_MIN, S_BAR_MAX), p[2].clamp(LAMBDA_MIN, LAMBDA_MAX)]
}

/// Solves the 3×3 system `a · z = b` by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (v, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut z = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * z[k]).sum();
        z[row] = (b[row] - tail) / a[row][row];
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

struct Refined {
    params: CurveParams,
    rss: f64,
    iterations: usize,
    converged: bool,
}

fn refine(points: &[Point], yb: f64, seed: CurveParams) -> Refined {
    let mut p = project(seed);
    let mut rss = sum_of_squares(points, yb, &p);
    let mut mu = 1e-3;
    let scale: f64 = points.iter().map(|q| q.y * q.y).sum::<f64>().max(f64::MIN_POSITIVE);

    for it in 1..=MAX_LM_ITERATIONS {
        if rss <= 1e-28 * scale {
            return Refined { params: p, rss, iterations: it, converged: true };
        }
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for q in points {
            let e = (-p[2] * q.x).exp();
            let g = [-yb, yb * (1.0 - e), yb * p[1] * q.x * e];
            let r = q.y - curve(yb, &p, q.x);
            for i in 0..3 {
                jtr[i] += g[i] * r;
                for j in 0..3 {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        let grad_norm = jtr.iter().map(|v| v * v).sum::<f64>().sqrt();
        if grad_norm <= 1e-14 * scale.sqrt() {
            return Refined { params: p, rss, iterations: it, converged: true };
        }

        let mut improved = false;
        while mu <= 1e12 {
            let mut a = jtj;
            for i in 0..3 {
                a[i][i] += mu * (jtj[i][i] + 1e-12);
            }
            let Some(step) = solve3(a, jtr) else {
                mu *= 4.0;
                continue;
            };
            let cand = project([p[0] + step[0], p[1] + step[1], p[2] + step[2]]);
            let cand_rss = sum_of_squares(points, yb, &cand);
            if cand_rss < rss {
                let gain = (rss - cand_rss) / rss.max(f64::MIN_POSITIVE);
                let moved = (0..3).map(|i| (cand[i] - p[i]).abs() / p[i].abs().max(1e-12)).fold(0.0, f64::max);
                p = cand;
                rss = cand_rss;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                if gain < 1e-15 && moved < 1e-14 {
                    return Refined { params: p, rss, iterations: it, converged: true };
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            // no descent step left at any damping: local minimum on the box
            return Refined { params: p, rss, iterations: it, converged: true };
        }
    }
    Refined { params: p, rss, iterations: MAX_LM_ITERATIONS, converged: false }
}

fn better(a: (f64, &CurveParams), b: (f64, &CurveParams)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1[2] < b.1[2])
}

/// Fits `(s, s̄, λ)`, and `ȳ` when it is not supplied, to frontier points.
///
/// With `ȳ` free the curve only identifies `ȳ(1 − s)`, `ȳs̄` and `λ`; `ȳ` is
/// then taken as the fitted asymptote, raised to the largest observed yield
/// if the data exceed it.
pub fn fit_conditional_yield(
    frontier: &[Point],
    potential_yield: Option<f64>,
) -> Result<FrontierFit, CalibrationError> {
    let needed = if potential_yield.is_some() { 3 } else { 4 };
    if frontier.len() < needed {
        return Err(CalibrationError::InsufficientData { needed, available: frontier.len() });
    }
    if let Some(p) = frontier.iter().find(|p| !(p.x >= 0.0 && p.x.is_finite() && p.y > 0.0 && p.y.is_finite())) {
        return Err(CalibrationError::InvalidObservation(format!(
            "frontier point ({}, {}) needs x >= 0 and y > 0",
            p.x, p.y
        )));
    }
    let max_y = frontier.iter().map(|p| p.y).fold(f64::MIN, f64::max);
    if let Some(yb) = potential_yield {
        if !(yb > 0.0 && yb.is_finite()) {
            return Err(CalibrationError::InvalidObservation(format!(
                "supplied potential yield must be positive, got {yb}"
            )));
        }
    }
    let reference = potential_yield.unwrap_or(max_y);

    let mut seeds: Vec<(f64, CurveParams)> =
        seed_grid().into_iter().map(|p| (sum_of_squares(frontier, reference, &p), p)).collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1[2].total_cmp(&b.1[2])));

    let mut best: Option<Refined> = None;
    for (_, seed) in seeds.iter().take(REFINED_SEEDS) {
        let r = refine(frontier, reference, *seed);
        if !r.rss.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|b| better((r.rss, &r.params), (b.rss, &b.params))) {
            best = Some(r);
        }
    }
    let best = best
        .ok_or_else(|| CalibrationError::FitFailed { reason: "no finite objective at any seed".into(), best: None })?;

    let (yb, params) = match potential_yield {
        Some(yb) => (yb, best.params),
        None => {
            let base = reference * (1.0 - best.params[0]);
            let gain = reference * best.params[1];
            let yb = (base + gain).max(max_y);
            (yb, [1.0 - base / yb, gain / yb, best.params[2]])
        }
    };
    let fit = FrontierFit {
        params: StressFactorParams {
            name: String::new(),
            s: params[0],
            s_bar: params[1],
            lambda: params[2],
            input_price: 0.0,
            input_unit: String::new(),
        },
        potential_yield: yb,
        potential_yield_fitted: potential_yield.is_none(),
        frontier_points: frontier.to_vec(),
        rss: best.rss,
        peel_rounds: 1,
        lm_iterations: best.iterations,
    };
    if !best.converged {
        return Err(CalibrationError::FitFailed {
            reason: format!("no convergence in {MAX_LM_ITERATIONS} iterations"),
            best: Some(Box::new(fit)),
        });
    }
    Ok(fit)
}
