//! Seeded synthetic farm populations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::model::{FarmSpec, StressFactorParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

/// A distribution truncated to `[min, max]` by resampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDist {
    #[serde(flatten)]
    pub dist: Distribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl ParamDist {
    pub fn fixed(value: f64) -> Self {
        Self { dist: Distribution::Fixed { value }, min: None, max: None }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Self { dist: Distribution::Uniform { low, high }, min: None, max: None }
    }

    pub fn bounded(mut self, min: f64, max: f64) -> Self {
        self.min = Some(min);
        self.max = Some(max);
        self
    }

    fn validate(&self, what: &str) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::Spec(format!("{what}: {m}")));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self.dist {
            Distribution::Fixed { value } if !finite(&[value]) => return bad("value must be finite".into()),
            Distribution::Uniform { low, high } if !(finite(&[low, high]) && low <= high) => {
                return bad(format!("uniform bounds [{low}, {high}] are invalid"))
            }
            Distribution::Normal { mean, sd } if !(finite(&[mean, sd]) && sd >= 0.0) => {
                return bad(format!("normal({mean}, {sd}) is invalid"))
            }
            Distribution::LogNormal { mu, sigma } if !(finite(&[mu, sigma]) && sigma >= 0.0) => {
                return bad(format!("lognormal({mu}, {sigma}) is invalid"))
            }
            _ => {}
        }
        if let (Some(lo), Some(hi)) = (self.min, self.max) {
            if !(lo <= hi) {
                return bad(format!("bounds [{lo}, {hi}] are empty"));
            }
        }
        Ok(())
    }

    fn sample_raw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.dist {
            Distribution::Fixed { value } => value,
            Distribution::Uniform { low, high } if low < high => rng.gen_range(low..high),
            Distribution::Uniform { low, .. } => low,
            Distribution::Normal { mean, sd } => Normal::new(mean, sd).map_or(mean, |d| d.sample(rng)),
            Distribution::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).map_or(mu.exp(), |d| d.sample(rng)),
        }
    }

    /// Draws until the value lies in the bounds and satisfies `valid`.
    fn sample(
        &self,
        rng: &mut ChaCha8Rng,
        max_attempts: usize,
        what: &str,
        valid: impl Fn(f64) -> bool,
    ) -> Result<f64, SimulationError> {
        for _ in 0..max_attempts {
            let v = self.sample_raw(rng);
            if self.min.is_none_or(|lo| v >= lo) && self.max.is_none_or(|hi| v <= hi) && valid(v) {
                return Ok(v);
            }
        }
        Err(SimulationError::Spec(format!("{what}: no admissible draw in {max_attempts} attempts")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDist {
    pub name: String,
    pub s: ParamDist,
    pub s_bar: ParamDist,
    pub lambda: ParamDist,
    pub input_price: ParamDist,
    #[serde(default = "default_unit")]
    pub input_unit: String,
}

fn default_unit() -> String {
    "kg/ha".to_string()
}

fn default_attempts() -> usize {
    1000
}

/// Distributions for every farm parameter plus the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub count: usize,
    pub seed: u64,
    pub potential_yield: ParamDist,
    pub hectares: ParamDist,
    pub tractor_energy: ParamDist,
    pub factors: Vec<FactorDist>,
    /// Resampling budget per parameter.
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.count == 0 {
            return Err(SimulationError::Spec("count must be >= 1".into()));
        }
        if self.max_attempts == 0 {
            return Err(SimulationError::Spec("max_attempts must be >= 1".into()));
        }
        if self.factors.is_empty() {
            return Err(SimulationError::Spec("at least one stress factor is required".into()));
        }
        self.potential_yield.validate("potential_yield")?;
        self.hectares.validate("hectares")?;
        self.tractor_energy.validate("tractor_energy")?;
        let mut names = std::collections::BTreeSet::new();
        for f in &self.factors {
            if !names.insert(&f.name) {
                return Err(SimulationError::Spec(format!("duplicate factor `{}`", f.name)));
            }
            f.s.validate(&format!("{}.s", f.name))?;
            f.s_bar.validate(&format!("{}.s_bar", f.name))?;
            f.lambda.validate(&format!("{}.lambda", f.name))?;
            f.input_price.validate(&format!("{}.input_price", f.name))?;
        }
        Ok(())
    }
}

/// Random stream of farm `index`: independent of how many farms come before it.
pub fn farm_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn generate_farm(spec: &PopulationSpec, index: usize) -> Result<FarmSpec, SimulationError> {
    let mut rng = farm_rng(spec.seed, index);
    let n = spec.max_attempts;
    let ctx = |p: &str| format!("farm {index}: {p}");
    let potential_yield = spec.potential_yield.sample(&mut rng, n, &ctx("potential_yield"), |v| v > 0.0)?;
    let hectares = spec.hectares.sample(&mut rng, n, &ctx("hectares"), |v| v > 0.0)?;
    let tractor_energy = spec.tractor_energy.sample(&mut rng, n, &ctx("tractor_energy"), |v| v >= 0.0)?;
    let mut stress_factors = Vec::with_capacity(spec.factors.len());
    for f in &spec.factors {
        let name = |p: &str| ctx(&format!("{}.{p}", f.name));
        let mut p = StressFactorParams::new(
            f.name.clone(),
            f.s.sample(&mut rng, n, &name("s"), |v| v > 0.0 && v < 1.0)?,
            f.s_bar.sample(&mut rng, n, &name("s_bar"), |v| v > 0.0 && v <= 1.0)?,
            f.lambda.sample(&mut rng, n, &name("lambda"), |v| v > 0.0)?,
            f.input_price.sample(&mut rng, n, &name("input_price"), |v| v >= 0.0)?,
        );
        p.input_unit = f.input_unit.clone();
        stress_factors.push(p);
    }
    let farm =
        FarmSpec { farm_id: format!("farm-{index:06}"), potential_yield, stress_factors, hectares, tractor_energy };
    farm.validate().map_err(|e| SimulationError::Spec(e.to_string()))?;
    Ok(farm)
}

/// Deterministic population: farm `i` depends only on `(seed, i)`.
pub fn generate_population(spec: &PopulationSpec) -> Result<Vec<FarmSpec>, SimulationError> {
    spec.validate()?;
    (0..spec.count).map(|i| generate_farm(spec, i)).collect()
}
