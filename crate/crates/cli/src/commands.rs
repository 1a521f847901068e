use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args};
use serde::Serialize;
use yieldgap::calibration::{calibrate_farm_stratum, CalibrationOptions, FrontierFit, DEFAULT_MIN_FRONTIER};
use yieldgap::io::{
    fmt_f64, load_active_ingredients, load_cf_database, load_farm_records, load_farm_specs, load_inventory,
    load_method_list, load_observations, load_process_db, record_demand, resolve_data_path, write_results,
    write_results_to, PopulationSource, RecordProcesses, RowError, ScenarioConfig, Table, Tabular, FARM_SCHEMA_VERSION,
};
use yieldgap::lca::{self, expand_inventory, rank_impacts, ImpactMethodSpec, ImpactResult, ImpactRow};
use yieldgap::optimizer::{evaluate_inputs, leveling_spread, SolverSettings};
use yieldgap::simulation::{self, Scenario, ScenarioResult, SweepParameter};
use yieldgap::{optimal_inputs, Decision, FarmSpec, Prices, StressFactorParams};

use crate::GlobalArgs;

/// Inputs printed for the reference farm, replayed by `--replay-paper`.
const PUBLISHED_INPUTS: [(&str, f64); 3] = [("nutrition", 50.13), ("weeds", 5.57), ("insects", 3.57)];

/// A command-line contract violation detected after parsing; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn num(v: f64) -> String {
    fmt_f64(v)
}

fn data_path(p: &Path) -> PathBuf {
    resolve_data_path(p)
}

fn emit<T: Tabular + Serialize>(results: &T, global: &GlobalArgs) -> Result<()> {
    match &global.output {
        Some(path) => {
            write_results(results, path, global.format).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut buf = Vec::new();
            write_results_to(results, global.format, &mut buf)?;
            let mut lock = std::io::stdout().lock();
            match lock.write_all(&buf).and_then(|()| lock.flush()) {
                // a closed pipe (`| head`) is not an error
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

fn warn_skipped(source: &Path, errors: &[RowError], global: &GlobalArgs) {
    if global.quiet {
        return;
    }
    for e in errors {
        eprintln!("warning: {}: skipped {e}", source.display());
    }
}

/// `wheat_price=300` or a bare number.
fn parse_prices(s: &str) -> Result<Prices, String> {
    let value = s.strip_prefix("wheat_price=").unwrap_or(s).trim();
    let p: f64 = value.parse().map_err(|_| format!("cannot read `{s}` as a wheat price"))?;
    Prices::new(p).map_err(|e| e.to_string())
}

/// `name:s:s_bar:lambda:price`.
fn parse_factor(s: &str) -> Result<StressFactorParams, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 5 {
        return Err(format!("expected name:s:s_bar:lambda:price, got `{s}`"));
    }
    let n = |i: usize| -> Result<f64, String> {
        parts[i].trim().parse().map_err(|_| format!("`{}` in `{s}` is not a number", parts[i]))
    };
    let p = StressFactorParams::new(parts[0].trim(), n(1)?, n(2)?, n(3)?, n(4)?);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

/// `name=value`.
fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(format!("`{k}` must be a finite non-negative quantity"));
    }
    Ok((k.trim().to_string(), v))
}

// ---- calibrate ------------------------------------------------------------

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Observation table: stratum,factor,x,y.
    #[arg(long)]
    pub observations: PathBuf,
    /// Known potential yield (t/ha); estimated per stratum when omitted.
    #[arg(long)]
    pub potential_yield: Option<f64>,
    /// Minimum number of frontier points before peeling stops. Defaults to
    /// one more than the number of fitted parameters: 4 with a known
    /// potential yield, 5 without.
    #[arg(long)]
    pub min_frontier: Option<usize>,
    /// Write observed points, frontier points and fitted curves here (CSV).
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Samples per fitted curve.
    #[arg(long, default_value_t = 50, requires = "curves")]
    pub samples: usize,
}

#[derive(Debug, Serialize)]
struct StratumFit {
    stratum: String,
    factor: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FrontierFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
#[serde(transparent)]
struct CalibrationReport(Vec<StratumFit>);

impl Tabular for CalibrationReport {
    fn table(&self) -> Table {
        let mut t = Table::new([
            "stratum",
            "factor",
            "s",
            "s_bar",
            "lambda",
            "potential_yield",
            "rss",
            "frontier_points",
            "peel_rounds",
            "error",
        ]);
        for r in &self.0 {
            match &r.fit {
                Some(f) => t.push([
                    r.stratum.clone(),
                    r.factor.clone(),
                    num(f.params.s),
                    num(f.params.s_bar),
                    num(f.params.lambda),
                    num(f.potential_yield),
                    num(f.rss),
                    f.frontier_points.len().to_string(),
                    f.peel_rounds.to_string(),
                    String::new(),
                ]),
                None => {
                    let mut row = vec![r.stratum.clone(), r.factor.clone()];
                    row.extend(std::iter::repeat_n(String::new(), 7));
                    row.push(r.error.clone().unwrap_or_default());
                    t.push(row);
                }
            }
        }
        t
    }
}

pub fn calibrate(args: &CalibrateArgs, global: &GlobalArgs) -> Result<()> {
    let min_frontier = args.min_frontier.unwrap_or(match args.potential_yield {
        Some(_) => DEFAULT_MIN_FRONTIER,
        None => DEFAULT_MIN_FRONTIER + 1,
    });
    if min_frontier < 3 {
        return usage("--min-frontier must be at least 3");
    }
    let path = data_path(&args.observations);
    let loaded = load_observations(&path, global.load_mode())?;
    warn_skipped(&path, &loaded.errors, global);
    let observations = loaded.records.into_iter().next().unwrap_or_default();
    let options = CalibrationOptions { min_frontier, potential_yield: args.potential_yield };

    let mut fits = Vec::new();
    let mut curves = Table::new(["stratum", "factor", "series", "x", "y"]);
    for (stratum, sets) in &observations {
        for (factor, result) in calibrate_farm_stratum(sets, &options) {
            let set = &sets[&factor];
            for p in &set.points {
                curves.push([stratum.clone(), factor.clone(), "observed".into(), num(p.x), num(p.y)]);
            }
            match result {
                Ok(fit) => {
                    for p in &fit.frontier_points {
                        curves.push([stratum.clone(), factor.clone(), "frontier".into(), num(p.x), num(p.y)]);
                    }
                    let x_max = set.points.iter().map(|p| p.x).fold(0.0, f64::max);
                    for (x, y) in fit.curve_samples(x_max, args.samples) {
                        curves.push([stratum.clone(), factor.clone(), "fitted".into(), num(x), num(y)]);
                    }
                    fits.push(StratumFit { stratum: stratum.clone(), factor, fit: Some(fit), error: None });
                }
                Err(e) => {
                    fits.push(StratumFit { stratum: stratum.clone(), factor, fit: None, error: Some(e.to_string()) })
                }
            }
        }
    }
    if let Some(path) = &args.curves {
        std::fs::write(path, curves.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
    }
    let failed = fits.iter().filter(|f| f.fit.is_none()).count();
    emit(&CalibrationReport(fits), global)?;
    if failed > 0 {
        bail!("{failed} factor fit(s) failed");
    }
    Ok(())
}

// ---- optimize -------------------------------------------------------------

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("farm_source").required(true).args(["farm", "factor"])))]
pub struct OptimizeArgs {
    /// Farm specification table.
    #[arg(long)]
    pub farm: Option<PathBuf>,
    /// Inline stress factor `name:s:s_bar:lambda:price`; repeat per factor.
    #[arg(long, value_parser = parse_factor, requires = "potential_yield")]
    pub factor: Vec<StressFactorParams>,
    /// Potential yield (t/ha) of the inline farm.
    #[arg(long, requires = "factor")]
    pub potential_yield: Option<f64>,
    /// Wheat price, `300` or `wheat_price=300`.
    #[arg(long, value_parser = parse_prices)]
    pub prices: Prices,
    /// Cap the target yield at 80% of potential yield.
    #[arg(long)]
    pub cap_exploitable_yield: bool,
    /// Also evaluate these inputs, `name=value`; repeat per factor.
    #[arg(long, value_parser = parse_assignment, conflicts_with = "replay_paper")]
    pub replay: Vec<(String, f64)>,
    /// Also evaluate the published inputs of the reference farm.
    #[arg(long)]
    pub replay_paper: bool,
}

#[derive(Debug, Serialize)]
struct Replay {
    inputs: BTreeMap<String, f64>,
    conditional_yields: BTreeMap<String, f64>,
    realized_yield: f64,
    leveling_spread: f64,
    profit: f64,
}

#[derive(Debug, Serialize)]
struct FarmDecision {
    farm_id: String,
    decision: Decision,
    conditional_yields: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replay: Option<Replay>,
}

#[derive(Debug, Serialize)]
#[serde(transparent)]
struct OptimizeReport(Vec<FarmDecision>);

impl Tabular for OptimizeReport {
    fn table(&self) -> Table {
        let mut t = Table::new(["farm_id", "plan", "quantity", "value"]);
        for f in &self.0 {
            let mut push = |plan: &str, q: String, v: String| t.push([f.farm_id.clone(), plan.to_string(), q, v]);
            let d = &f.decision;
            push("optimum", "target_yield".into(), num(d.target_yield));
            for (k, x) in &d.inputs {
                push("optimum", format!("input.{k}"), num(*x));
            }
            for (k, y) in &f.conditional_yields {
                push("optimum", format!("conditional_yield.{k}"), num(*y));
            }
            push("optimum", "profit".into(), num(d.profit));
            push("optimum", "corner".into(), d.corner.to_string());
            if let Some(r) = &f.replay {
                for (k, x) in &r.inputs {
                    push("replay", format!("input.{k}"), num(*x));
                }
                for (k, y) in &r.conditional_yields {
                    push("replay", format!("conditional_yield.{k}"), num(*y));
                }
                push("replay", "realized_yield".into(), num(r.realized_yield));
                push("replay", "leveling_spread".into(), num(r.leveling_spread));
                push("replay", "profit".into(), num(r.profit));
            }
        }
        t
    }
}

fn conditional_map(farm: &FarmSpec, inputs: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let ys = farm.conditional_yields(inputs)?;
    Ok(farm.stress_factors.iter().map(|f| f.name.clone()).zip(ys).collect())
}

pub fn optimize(args: &OptimizeArgs, global: &GlobalArgs) -> Result<()> {
    let farms = match &args.farm {
        Some(path) => {
            let path = data_path(path);
            let loaded = load_farm_specs(&path, global.load_mode())?;
            warn_skipped(&path, &loaded.errors, global);
            loaded.records
        }
        None => {
            let farm = FarmSpec {
                farm_id: "inline".into(),
                potential_yield: args.potential_yield.expect("required by clap"),
                stress_factors: args.factor.clone(),
                hectares: 1.0,
                tractor_energy: 0.0,
            };
            farm.validate()?;
            vec![farm]
        }
    };
    let replay: Option<BTreeMap<String, f64>> = if args.replay_paper {
        Some(PUBLISHED_INPUTS.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    } else if !args.replay.is_empty() {
        Some(args.replay.iter().cloned().collect())
    } else {
        None
    };
    let settings = SolverSettings { cap_exploitable_yield: args.cap_exploitable_yield, ..SolverSettings::default() };

    let mut out = Vec::with_capacity(farms.len());
    for farm in &farms {
        let decision =
            optimal_inputs(farm, &args.prices, &settings).with_context(|| format!("farm `{}`", farm.farm_id))?;
        let conditional_yields = conditional_map(farm, &decision.inputs)?;
        let replay = match &replay {
            Some(inputs) => {
                for f in &farm.stress_factors {
                    if !inputs.contains_key(&f.name) {
                        bail!("replay inputs give no quantity for factor `{}` of farm `{}`", f.name, farm.farm_id);
                    }
                }
                let d = evaluate_inputs(farm, &args.prices, inputs)?;
                Some(Replay {
                    conditional_yields: conditional_map(farm, inputs)?,
                    realized_yield: d.target_yield,
                    leveling_spread: leveling_spread(&d, farm)?,
                    profit: d.profit,
                    inputs: inputs.clone(),
                })
            }
            None => None,
        };
        out.push(FarmDecision { farm_id: farm.farm_id.clone(), decision, conditional_yields, replay });
    }
    emit(&OptimizeReport(out), global)
}

// ---- assess ---------------------------------------------------------------

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("assess_source").required(true).args(["inventory", "records"])))]
pub struct AssessArgs {
    /// Elementary-flow inventory: substance,compartment,amount,unit.
    #[arg(long)]
    pub inventory: Option<PathBuf>,
    /// Farm records; each is assessed per hectare.
    #[arg(long, requires_all = ["process_db", "active_ingredients", "mj_per_tractor_hour"])]
    pub records: Option<PathBuf>,
    /// Characterization factor table.
    #[arg(long)]
    pub cf_db: PathBuf,
    /// Methods to report: method,target,geography[,perspective].
    #[arg(long)]
    pub methods: PathBuf,
    /// Process datasets used to expand farm records.
    #[arg(long)]
    pub process_db: Option<PathBuf>,
    /// Pesticide class to active ingredient table.
    #[arg(long)]
    pub active_ingredients: Option<PathBuf>,
    /// Tractor energy per hour of use (MJ/h).
    #[arg(long)]
    pub mj_per_tractor_hour: Option<f64>,
    /// Process supplying one MJ of tractor work.
    #[arg(long, default_value = "tractor_work")]
    pub tractor_process: String,
    /// Process supplying one kg of nitrogen.
    #[arg(long, default_value = "nitrogen_fertilizer")]
    pub nitrogen_process: String,
    /// Farm record schema version.
    #[arg(long, default_value_t = FARM_SCHEMA_VERSION)]
    pub schema_version: u32,
}

#[derive(Debug, Serialize)]
struct FarmImpacts {
    farm_id: String,
    year: i32,
    demand_per_ha: BTreeMap<String, f64>,
    impacts_per_ha: ImpactResult,
}

#[derive(Debug, Serialize)]
#[serde(transparent)]
struct RecordsReport(Vec<FarmImpacts>);

impl Tabular for RecordsReport {
    fn table(&self) -> Table {
        let mut t = Table::new(["farm_id", "year"]);
        for f in &self.0 {
            let inner = f.impacts_per_ha.table();
            if t.headers.len() == 2 {
                t.headers.extend(inner.headers.iter().cloned());
            }
            for r in inner.rows {
                let mut row = vec![f.farm_id.clone(), f.year.to_string()];
                row.extend(r);
                t.push(row);
            }
        }
        t
    }
}

fn load_methods(cf_db: &Path, methods: &Path) -> Result<Vec<ImpactMethodSpec>> {
    let db = load_cf_database(&data_path(cf_db))?;
    let selections = load_method_list(&data_path(methods))?;
    Ok(db.resolve_all(&selections)?)
}

pub fn assess(args: &AssessArgs, global: &GlobalArgs) -> Result<()> {
    let methods = load_methods(&args.cf_db, &args.methods)?;
    if let Some(path) = &args.inventory {
        let inventory = load_inventory(&data_path(path))?;
        let result = lca::assess(&inventory, &methods)?;
        warn_uncharacterized(&result, global);
        return emit(&result, global);
    }

    let path = data_path(args.records.as_deref().expect("required by clap"));
    let loaded = load_farm_records(&path, args.schema_version, global.load_mode())?;
    warn_skipped(&path, &loaded.errors, global);
    let processes = load_process_db(&data_path(args.process_db.as_deref().expect("required by clap")))?;
    let ai = load_active_ingredients(&data_path(args.active_ingredients.as_deref().expect("required by clap")))?;
    let mj = args.mj_per_tractor_hour.expect("required by clap");
    if !(mj >= 0.0 && mj.is_finite()) {
        return usage("--mj-per-tractor-hour must be a finite non-negative number");
    }
    let record_processes = RecordProcesses {
        tractor: args.tractor_process.clone(),
        nitrogen: args.nitrogen_process.clone(),
        mj_per_tractor_hour: mj,
    };
    let mut out = Vec::with_capacity(loaded.records.len());
    for record in &loaded.records {
        let demand = record_demand(record, &ai, &record_processes)?;
        let inventory = expand_inventory(&demand, &processes)?;
        let impacts = lca::assess(&inventory, &methods)?;
        out.push(FarmImpacts {
            farm_id: record.farm_id.clone(),
            year: record.year,
            demand_per_ha: demand,
            impacts_per_ha: impacts,
        });
    }
    emit(&RecordsReport(out), global)
}

fn warn_uncharacterized(result: &ImpactResult, global: &GlobalArgs) {
    if global.quiet || result.uncharacterized.is_empty() {
        return;
    }
    let flows: Vec<String> = result.uncharacterized.iter().map(|f| f.to_string()).collect();
    eprintln!("warning: flows not characterized by any method: {}", flows.join(", "));
}

// ---- simulate / sweep / report ----------------------------------------------

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the synthetic population seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the wheat price, `300` or `wheat_price=300`.
    #[arg(long, value_parser = parse_prices)]
    pub prices: Option<Prices>,
    /// Override the characterization factor table.
    #[arg(long)]
    pub cf_db: Option<PathBuf>,
    /// Override the process datasets.
    #[arg(long)]
    pub process_db: Option<PathBuf>,
    /// Override the method list.
    #[arg(long)]
    pub methods: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Print population aggregates instead of per-farm rows.
    #[arg(long)]
    pub summary: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// `wheat_price` or `input_price.<factor>`.
    #[arg(long)]
    pub parameter: SweepParameter,
    /// Grid values, comma separated.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub values: Vec<f64>,
}

fn load_scenario(args: &ScenarioArgs, global: &GlobalArgs) -> Result<Scenario> {
    let path = data_path(&args.config);
    let mut cfg = ScenarioConfig::load(&path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = args.seed {
        match &mut cfg.population {
            PopulationSource::Synthetic(spec) => spec.seed = seed,
            PopulationSource::File { .. } => return usage("--seed applies only to synthetic populations"),
        }
    }
    if let Some(p) = args.prices {
        cfg.prices = p;
    }
    if let Some(p) = &args.cf_db {
        cfg.data.cf_db = data_path(p);
    }
    if let Some(p) = &args.process_db {
        cfg.data.process_db = data_path(p);
    }
    if let Some(p) = &args.methods {
        cfg.data.methods = data_path(p);
    }
    if let Some(t) = args.threads {
        cfg.simulation.threads = t;
    }
    let scenario = Scenario::from_config(&cfg, global.load_mode())?;
    warn_skipped(&path, &scenario.skipped, global);
    Ok(scenario)
}

fn warn_failures(result: &ScenarioResult, global: &GlobalArgs) {
    if global.quiet {
        return;
    }
    for f in &result.failures {
        eprintln!("warning: farm {} ({}) failed: {}", f.index, f.farm_id, f.error);
    }
}

/// Population aggregates as metric/value rows.
#[derive(Debug, Serialize)]
struct Summary<'a> {
    meta: &'a simulation::ScenarioMeta,
    aggregates: &'a simulation::Aggregates,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking: Option<Vec<RankedTotal>>,
}

#[derive(Debug, Serialize)]
struct RankedTotal {
    endpoint_unit: String,
    rank: usize,
    method: String,
    target: String,
    midpoint_total: f64,
    midpoint_unit: String,
    endpoint_total: f64,
}

impl Tabular for Summary<'_> {
    fn table(&self) -> Table {
        let mut t = Table::new(["section", "name", "value", "unit"]);
        let mut push = |s: &str, n: String, v: String, u: &str| t.push([s.to_string(), n, v, u.to_string()]);
        push("meta", "wheat_price".into(), num(self.meta.wheat_price), "currency/t");
        push("meta", "seed".into(), self.meta.seed.map_or(String::new(), |s| s.to_string()), "");
        push("meta", "config_hash".into(), self.meta.config_hash.clone(), "");
        let a = self.aggregates;
        push("aggregate", "farms".into(), a.farms.to_string(), "");
        push("aggregate", "failed".into(), a.failed.to_string(), "");
        push("aggregate", "hectares".into(), num(a.hectares), "ha");
        push("aggregate", "total_profit".into(), num(a.total_profit), "currency");
        push("aggregate", "mean_target_yield".into(), num(a.mean_target_yield), "t/ha");
        push("aggregate", "total_daly".into(), num(a.total_daly), "DALY");
        push("aggregate", "daly_per_ha".into(), num(a.daly_per_ha), "DALY/ha");
        push("aggregate", "total_species_year".into(), num(a.total_species_year), "species.year");
        push("aggregate", "species_year_per_ha".into(), num(a.species_year_per_ha), "species.year/ha");
        for (k, v) in &a.input_totals {
            push("aggregate", format!("input_total.{k}"), num(*v), "");
        }
        for r in self.ranking.iter().flatten() {
            push(
                &format!("rank.{}", r.endpoint_unit),
                format!("{}. {} / {}", r.rank, r.method, r.target),
                num(r.endpoint_total),
                &r.endpoint_unit,
            );
        }
        t
    }
}

/// Population totals per method (per-ha scores times hectares), ranked per endpoint unit.
fn population_ranking(result: &ScenarioResult) -> Vec<RankedTotal> {
    let mut totals: Vec<ImpactRow> = Vec::new();
    for farm in &result.farms {
        for r in &farm.impacts_per_ha.rows {
            let pos = totals.iter().position(|t| {
                t.method == r.method
                    && t.target == r.target
                    && t.geography == r.geography
                    && t.perspective == r.perspective
            });
            match pos {
                Some(i) => {
                    totals[i].midpoint += r.midpoint * farm.hectares;
                    totals[i].endpoint += r.endpoint * farm.hectares;
                }
                None => {
                    let mut row = r.clone();
                    row.midpoint *= farm.hectares;
                    row.endpoint *= farm.hectares;
                    totals.push(row);
                }
            }
        }
    }
    let combined = ImpactResult { rows: totals, uncharacterized: Vec::new() };
    rank_impacts(&combined)
        .into_iter()
        .flat_map(|cat| {
            cat.rows.into_iter().enumerate().map(move |(i, r)| RankedTotal {
                endpoint_unit: cat.endpoint_unit.to_string(),
                rank: i + 1,
                method: r.label(),
                target: r.target,
                midpoint_total: r.midpoint,
                midpoint_unit: r.midpoint_unit,
                endpoint_total: r.endpoint,
            })
        })
        .collect()
}

pub fn simulate(args: &ScenarioArgs, global: &GlobalArgs) -> Result<()> {
    let scenario = load_scenario(args, global)?;
    let result = scenario.run()?;
    warn_failures(&result, global);
    if args.summary {
        emit(&Summary { meta: &result.meta, aggregates: &result.aggregates, ranking: None }, global)
    } else {
        emit(&result, global)
    }
}

pub fn sweep(args: &SweepArgs, global: &GlobalArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario, global)?;
    if args.values.iter().any(|v| !v.is_finite()) {
        return usage("--values must be finite numbers");
    }
    let result = simulation::sweep(
        &args.parameter,
        &args.values,
        &scenario.farms,
        &scenario.prices,
        &scenario.lca,
        &scenario.settings,
    )?;
    for p in &result.points {
        warn_failures(&p.result, global);
    }
    emit(&result, global)
}

pub fn report(args: &ScenarioArgs, global: &GlobalArgs) -> Result<()> {
    let scenario = load_scenario(args, global)?;
    let result = scenario.run()?;
    warn_failures(&result, global);
    emit(
        &Summary { meta: &result.meta, aggregates: &result.aggregates, ranking: Some(population_ranking(&result)) },
        global,
    )
}
