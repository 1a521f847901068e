//! Batch evaluation of farm populations: per-farm optimization and impact
//! scoring, population aggregates, and parameter sweeps.
//!
//! Farms are independent work items. Results are collected in farm order
//! and summed sequentially, so aggregates are bitwise identical whatever the
//! number of worker threads.

mod population;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io::{
    self, fmt_f64, load_active_ingredients, load_cf_database, load_farm_specs, load_method_list, load_process_db,
    IoError, LoadMode, PopulationSource, ScenarioConfig, Table, Tabular,
};
use crate::lca::{
    assess, expand_inventory, EndpointUnit, ImpactMethodSpec, ImpactResult, InventoryVector, LcaError, ProcessDb,
};
use crate::model::{Decision, FarmSpec, Prices};
use crate::optimizer::{evaluate_inputs, optimal_inputs, SolverSettings};

pub use population::{
    farm_rng, generate_farm, generate_population, Distribution, FactorDist, ParamDist, PopulationSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("population spec: {0}")]
    Spec(String),
    #[error("scenario: {0}")]
    Run(String),
    #[error(transparent)]
    Lca(#[from] LcaError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// How each farm's inputs are chosen.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputPlan {
    /// Profit-maximizing inputs.
    #[default]
    Optimize,
    /// The same per-hectare inputs on every farm; yield follows from them.
    Prescribed(BTreeMap<String, f64>),
}

/// Process demand created by one unit of a stress factor's input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FactorLink {
    /// `per_unit` units of the process per unit of input.
    Process { process_id: String, per_unit: f64 },
    /// A pesticide applied at a fixed active-ingredient dose whenever the input is positive.
    Pesticide { ingredient: String, process_id: String, kg_per_ha: f64 },
}

/// Everything needed to turn a decision into impacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LcaModel {
    pub processes: ProcessDb,
    pub methods: Vec<ImpactMethodSpec>,
    /// Process supplying one MJ of tractor work.
    pub tractor_process: String,
    pub links: BTreeMap<String, FactorLink>,
}

impl LcaModel {
    /// Process demand per hectare implied by a farm's decision.
    pub fn demand(&self, farm: &FarmSpec, decision: &Decision) -> BTreeMap<String, f64> {
        let mut demand = BTreeMap::new();
        if farm.tractor_energy > 0.0 {
            demand.insert(self.tractor_process.clone(), farm.tractor_energy);
        }
        for (factor, x) in &decision.inputs {
            let Some(link) = self.links.get(factor) else { continue };
            let (process, amount) = match link {
                FactorLink::Process { process_id, per_unit } => (process_id, x * per_unit),
                FactorLink::Pesticide { process_id, kg_per_ha, .. } => {
                    (process_id, if *x > 0.0 { *kg_per_ha } else { 0.0 })
                }
            };
            if amount != 0.0 {
                *demand.entry(process.clone()).or_insert(0.0) += amount;
            }
        }
        demand
    }

    pub fn inventory(&self, farm: &FarmSpec, decision: &Decision) -> Result<InventoryVector, LcaError> {
        expand_inventory(&self.demand(farm, decision), &self.processes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub solver: SolverSettings,
    pub plan: InputPlan,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
    /// Population seed, carried into the result metadata.
    pub seed: Option<u64>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { solver: SolverSettings::default(), plan: InputPlan::Optimize, threads: 0, seed: None }
    }
}

/// One farm's decision and impacts. Impacts are per hectare; totals follow
/// by multiplying with `hectares`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmOutcome {
    pub index: usize,
    pub farm_id: String,
    pub hectares: f64,
    pub decision: Decision,
    pub demand_per_ha: BTreeMap<String, f64>,
    pub impacts_per_ha: ImpactResult,
    pub daly_per_ha: f64,
    pub species_year_per_ha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmFailure {
    pub index: usize,
    pub farm_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub farms: usize,
    pub failed: usize,
    pub hectares: f64,
    pub total_profit: f64,
    pub total_daly: f64,
    pub total_species_year: f64,
    /// Area-weighted, i.e. totals divided by total hectares. Zero for an empty run.
    pub daly_per_ha: f64,
    pub species_year_per_ha: f64,
    /// Unweighted mean over farms.
    pub mean_target_yield: f64,
    /// Input totals over the population (per-ha quantity × hectares).
    pub input_totals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub wheat_price: f64,
    pub seed: Option<u64>,
    /// SHA-256 of farms, prices, solver settings, input plan and LCA model.
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub meta: ScenarioMeta,
    pub aggregates: Aggregates,
    pub farms: Vec<FarmOutcome>,
    pub failures: Vec<FarmFailure>,
}

fn evaluate_farm(
    index: usize,
    farm: &FarmSpec,
    prices: &Prices,
    lca: &LcaModel,
    settings: &RunSettings,
) -> Result<FarmOutcome, String> {
    let decision = match &settings.plan {
        InputPlan::Optimize => optimal_inputs(farm, prices, &settings.solver),
        InputPlan::Prescribed(inputs) => evaluate_inputs(farm, prices, inputs),
    }
    .map_err(|e| e.to_string())?;
    let demand = lca.demand(farm, &decision);
    let inventory = expand_inventory(&demand, &lca.processes).map_err(|e| e.to_string())?;
    let impacts = assess(&inventory, &lca.methods).map_err(|e| e.to_string())?;
    Ok(FarmOutcome {
        index,
        farm_id: farm.farm_id.clone(),
        hectares: farm.hectares,
        daly_per_ha: impacts.endpoint_total(EndpointUnit::Daly),
        species_year_per_ha: impacts.endpoint_total(EndpointUnit::SpeciesYear),
        decision,
        demand_per_ha: demand,
        impacts_per_ha: impacts,
    })
}

fn aggregate(outcomes: &[FarmOutcome], failed: usize) -> Aggregates {
    let mut a = Aggregates { farms: outcomes.len(), failed, ..Aggregates::default() };
    let mut yield_sum = 0.0;
    for o in outcomes {
        a.hectares += o.hectares;
        a.total_profit += o.decision.profit * o.hectares;
        a.total_daly += o.daly_per_ha * o.hectares;
        a.total_species_year += o.species_year_per_ha * o.hectares;
        yield_sum += o.decision.target_yield;
        for (k, x) in &o.decision.inputs {
            *a.input_totals.entry(k.clone()).or_insert(0.0) += x * o.hectares;
        }
    }
    if a.hectares > 0.0 {
        a.daly_per_ha = a.total_daly / a.hectares;
        a.species_year_per_ha = a.total_species_year / a.hectares;
    }
    if a.farms > 0 {
        a.mean_target_yield = yield_sum / a.farms as f64;
    }
    a
}

fn config_hash(farms: &[FarmSpec], prices: &Prices, lca: &LcaModel, settings: &RunSettings) -> String {
    #[derive(Serialize)]
    struct Hashed<'a> {
        farms: &'a [FarmSpec],
        prices: &'a Prices,
        solver: &'a SolverSettings,
        plan: &'a InputPlan,
        seed: Option<u64>,
        lca: &'a LcaModel,
    }
    let json = serde_json::to_vec(&Hashed {
        farms,
        prices,
        solver: &settings.solver,
        plan: &settings.plan,
        seed: settings.seed,
        lca,
    })
    .expect("scenario inputs serialize");
    hex::encode(Sha256::digest(json))
}

/// Evaluates every farm. Farms that fail are quarantined into
/// [`ScenarioResult::failures`]; the rest still count.
pub fn run_scenario(
    farms: &[FarmSpec],
    prices: &Prices,
    lca: &LcaModel,
    settings: &RunSettings,
) -> Result<ScenarioResult, SimulationError> {
    prices.validate().map_err(|e| SimulationError::Run(e.to_string()))?;
    settings.solver.validate().map_err(|e| SimulationError::Run(e.to_string()))?;
    for m in &lca.methods {
        m.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads)
        .build()
        .map_err(|e| SimulationError::Run(format!("thread pool: {e}")))?;
    let results: Vec<Result<FarmOutcome, String>> = pool
        .install(|| farms.par_iter().enumerate().map(|(i, f)| evaluate_farm(i, f, prices, lca, settings)).collect());

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(error) => failures.push(FarmFailure { index: i, farm_id: farms[i].farm_id.clone(), error }),
        }
    }
    Ok(ScenarioResult {
        meta: ScenarioMeta {
            wheat_price: prices.wheat_price,
            seed: settings.seed,
            config_hash: config_hash(farms, prices, lca, settings),
        },
        aggregates: aggregate(&outcomes, failures.len()),
        farms: outcomes,
        failures,
    })
}

/// A ready-to-run scenario: population, prices, impact model and settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub farms: Vec<FarmSpec>,
    pub prices: Prices,
    pub lca: LcaModel,
    pub settings: RunSettings,
    /// Rows of the farm file skipped in lenient loading.
    pub skipped: Vec<io::RowError>,
}

impl Scenario {
    /// Loads every file a configuration references and builds the population.
    pub fn from_config(cfg: &ScenarioConfig, mode: LoadMode) -> Result<Self, SimulationError> {
        cfg.validate()?;
        let processes = load_process_db(&cfg.data.process_db)?;
        let cf_db = load_cf_database(&cfg.data.cf_db)?;
        let selections = load_method_list(&cfg.data.methods)?;
        let methods = cf_db.resolve_all(&selections)?;
        let ai_map = match &cfg.data.active_ingredients {
            Some(p) => Some(load_active_ingredients(p)?),
            None => None,
        };

        let mut links = BTreeMap::new();
        for l in &cfg.links {
            let link = match (&l.process, l.pesticide) {
                (Some(p), _) => FactorLink::Process { process_id: p.clone(), per_unit: l.per_unit.unwrap_or(1.0) },
                (None, Some(t)) => {
                    let tox = l.toxicity.as_deref().unwrap_or_default();
                    let a = ai_map
                        .as_ref()
                        .and_then(|m| m.get(t, tox))
                        .ok_or_else(|| SimulationError::Run(format!("no active ingredient for {t} / {tox}")))?;
                    FactorLink::Pesticide {
                        ingredient: a.ingredient.clone(),
                        process_id: a.process_id.clone(),
                        kg_per_ha: a.default_dose_kg_per_ha(),
                    }
                }
                (None, None) => unreachable!("validated"),
            };
            links.insert(l.factor.clone(), link);
        }
        let lca = LcaModel { processes, methods, tractor_process: cfg.processes.tractor.clone(), links };
        for process in lca
            .links
            .values()
            .map(|l| match l {
                FactorLink::Process { process_id, .. } | FactorLink::Pesticide { process_id, .. } => process_id,
            })
            .chain([&lca.tractor_process])
        {
            if lca.processes.get(process).is_none() {
                return Err(LcaError::UnknownProcess(process.clone()).into());
            }
        }

        let (farms, skipped, seed) = match &cfg.population {
            PopulationSource::File { path } => {
                let loaded = load_farm_specs(path, mode)?;
                (loaded.records, loaded.errors, None)
            }
            PopulationSource::Synthetic(spec) => (generate_population(spec)?, Vec::new(), Some(spec.seed)),
        };
        let plan = match &cfg.simulation.prescribed {
            Some(p) => InputPlan::Prescribed(p.clone()),
            None => InputPlan::Optimize,
        };
        Ok(Scenario {
            farms,
            prices: cfg.prices,
            lca,
            settings: RunSettings { solver: cfg.solver, plan, threads: cfg.simulation.threads, seed },
            skipped,
        })
    }

    pub fn run(&self) -> Result<ScenarioResult, SimulationError> {
        run_scenario(&self.farms, &self.prices, &self.lca, &self.settings)
    }
}

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    WheatPrice,
    /// Price of the input relieving the named stress factor, on every farm.
    InputPrice(String),
}

impl SweepParameter {
    pub fn label(&self) -> String {
        match self {
            SweepParameter::WheatPrice => "wheat_price".into(),
            SweepParameter::InputPrice(f) => format!("input_price.{f}"),
        }
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wheat_price" => Ok(Self::WheatPrice),
            _ => match s.strip_prefix("input_price.").or_else(|| s.strip_prefix("input_price:")) {
                Some(f) if !f.is_empty() => Ok(Self::InputPrice(f.to_string())),
                _ => Err(format!("unknown sweep parameter `{s}` (wheat_price or input_price.<factor>)")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub result: ScenarioResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
}

/// One scenario per grid value over a shared population.
pub fn sweep(
    parameter: &SweepParameter,
    grid: &[f64],
    farms: &[FarmSpec],
    prices: &Prices,
    lca: &LcaModel,
    settings: &RunSettings,
) -> Result<SweepResult, SimulationError> {
    if grid.is_empty() {
        return Err(SimulationError::Run("sweep grid is empty".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &value in grid {
        let result = match parameter {
            SweepParameter::WheatPrice => run_scenario(farms, &Prices { wheat_price: value }, lca, settings)?,
            SweepParameter::InputPrice(name) => {
                if !farms.iter().any(|f| f.factor(name).is_some()) {
                    return Err(SimulationError::Run(format!("no farm has a factor named `{name}`")));
                }
                let varied: Vec<FarmSpec> = farms
                    .iter()
                    .cloned()
                    .map(|mut f| {
                        for p in f.stress_factors.iter_mut().filter(|p| &p.name == name) {
                            p.input_price = value;
                        }
                        f
                    })
                    .collect();
                run_scenario(&varied, prices, lca, settings)?
            }
        };
        points.push(SweepPoint { value, result });
    }
    Ok(SweepResult { parameter: parameter.clone(), points })
}

fn input_names<'a>(results: impl Iterator<Item = &'a ScenarioResult>) -> Vec<String> {
    let mut names: Vec<String> = results.flat_map(|r| r.aggregates.input_totals.keys().cloned()).collect();
    names.sort();
    names.dedup();
    names
}

impl Tabular for SweepResult {
    /// Tidy table: one row per grid value.
    fn table(&self) -> Table {
        let inputs = input_names(self.points.iter().map(|p| &p.result));
        let mut headers: Vec<String> = [
            "parameter",
            "value",
            "farms",
            "failed",
            "mean_target_yield",
            "total_profit",
            "total_daly",
            "total_species_year",
        ]
        .map(String::from)
        .to_vec();
        headers.extend(inputs.iter().map(|n| format!("input_total.{n}")));
        let mut t = Table::new(headers);
        for p in &self.points {
            let a = &p.result.aggregates;
            let mut row = vec![
                self.parameter.label(),
                fmt_f64(p.value),
                a.farms.to_string(),
                a.failed.to_string(),
                fmt_f64(a.mean_target_yield),
                fmt_f64(a.total_profit),
                fmt_f64(a.total_daly),
                fmt_f64(a.total_species_year),
            ];
            row.extend(inputs.iter().map(|n| fmt_f64(a.input_totals.get(n).copied().unwrap_or(0.0))));
            t.push(row);
        }
        t
    }
}

impl Tabular for ScenarioResult {
    /// One row per farm, failures included with their error.
    fn table(&self) -> Table {
        let inputs = input_names(std::iter::once(self));
        let mut headers: Vec<String> = [
            "index",
            "farm_id",
            "hectares",
            "target_yield",
            "profit_per_ha",
            "corner",
            "daly_per_ha",
            "species_year_per_ha",
        ]
        .map(String::from)
        .to_vec();
        headers.extend(inputs.iter().map(|n| format!("input.{n}")));
        headers.push("error".into());
        let width = headers.len();
        let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
        for o in &self.farms {
            let mut row = vec![
                o.index.to_string(),
                o.farm_id.clone(),
                fmt_f64(o.hectares),
                fmt_f64(o.decision.target_yield),
                fmt_f64(o.decision.profit),
                o.decision.corner.to_string(),
                fmt_f64(o.daly_per_ha),
                fmt_f64(o.species_year_per_ha),
            ];
            row.extend(inputs.iter().map(|n| o.decision.inputs.get(n).map_or(String::new(), |x| fmt_f64(*x))));
            row.push(String::new());
            rows.push((o.index, row));
        }
        for f in &self.failures {
            let mut row = vec![String::new(); width];
            row[0] = f.index.to_string();
            row[1] = f.farm_id.clone();
            row[width - 1] = f.error.clone();
            rows.push((f.index, row));
        }
        rows.sort_by_key(|(i, _)| *i);
        let mut t = Table::new(headers);
        for (_, r) in rows {
            t.push(r);
        }
        t
    }
}
