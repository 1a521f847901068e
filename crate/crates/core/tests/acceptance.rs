//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any failure.
//!
//! Reference values are computed here from closed forms or brute force, not
//! taken from the library under test.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use yieldgap::calibration::{calibrate_factor, convex_hull, fit_conditional_yield, nw_frontier, pareto_undominated};
use yieldgap::calibration::{CalibrationOptions, ObservationSet, Point};
use yieldgap::io::{load_cf_database, load_inventory, load_method_list, LoadMode, ScenarioConfig};
use yieldgap::lca::{
    assess, rank_impacts, Compartment, ElementaryFlow, EndpointUnit, ImpactResult, InventoryVector, MethodSelection,
};
use yieldgap::optimizer::{leveling_spread, one_factor_solution};
use yieldgap::simulation::Scenario;
use yieldgap::{optimal_inputs, FarmSpec, Prices, SolverSettings, StressFactorParams};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn table1() -> FarmSpec {
    FarmSpec {
        farm_id: "example".into(),
        potential_yield: 8.4,
        stress_factors: vec![
            StressFactorParams::new("nutrition", 0.5, 0.5, 0.06, 1.5),
            StressFactorParams::new("weeds", 0.4, 0.4, 0.5, 10.0),
            StressFactorParams::new("insects", 0.3, 0.3, 0.7, 10.0),
        ],
        hectares: 1.0,
        tractor_energy: 900.0,
    }
}

/// Leveled optimum by direct search: golden section on profit over target
/// yields, each input from the inverted response curve.
fn grid_optimum(farm: &FarmSpec, wheat_price: f64) -> (f64, Vec<f64>) {
    let yb = farm.potential_yield;
    let inputs_at = |y: f64| -> Vec<f64> {
        farm.stress_factors
            .iter()
            .map(|f| {
                let gap = (y - yb * (1.0 - f.s)) / (yb * f.s_bar);
                if gap <= 0.0 {
                    0.0
                } else {
                    -(1.0 - gap).ln() / f.lambda
                }
            })
            .collect()
    };
    let profit = |y: f64| {
        let xs = inputs_at(y);
        wheat_price * y - farm.stress_factors.iter().zip(&xs).map(|(f, x)| f.input_price * x).sum::<f64>()
    };
    let lo = farm.stress_factors.iter().map(|f| yb * (1.0 - f.s)).fold(f64::INFINITY, f64::min);
    let hi = farm.stress_factors.iter().map(|f| yb * (1.0 - f.s + f.s_bar)).fold(f64::INFINITY, f64::min);
    let (mut a, mut b) = (lo, hi * (1.0 - 1e-15));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if profit(c) < profit(d) {
            a = c;
        } else {
            b = d;
        }
    }
    let y = 0.5 * (a + b);
    (y, inputs_at(y))
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, n: u32, title: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} criterion {n} ({title}): {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn criterion_1(r: &mut Report) {
    let farm = table1();
    let prices = Prices { wheat_price: 300.0 };
    let settings = SolverSettings::default();
    let d = optimal_inputs(&farm, &prices, &settings).expect("optimum");
    let x: Vec<f64> = ["nutrition", "weeds", "insects"].iter().map(|k| d.inputs[*k]).collect();
    let expected = [50.94, 5.67, 3.64];
    let (oracle_y, oracle_x) = grid_optimum(&farm, 300.0);
    let printed = [50.13, 5.57, 3.57];

    let runs = 1000;
    let start = Instant::now();
    for _ in 0..runs {
        std::hint::black_box(optimal_inputs(&farm, &prices, &settings).unwrap());
    }
    let per_solve = start.elapsed() / runs;

    let y_ok = (d.target_yield - 8.20238).abs() <= 1e-4 && (d.target_yield - oracle_y).abs() <= 1e-6;
    let x_ok = x.iter().zip(expected).all(|(a, b)| (a - b).abs() <= 0.01)
        && x.iter().zip(&oracle_x).all(|(a, b)| (a - b).abs() <= 1e-4);
    let printed_dev = x.iter().zip(printed).map(|(a, b)| rel(*a, b)).fold(0.0, f64::max);
    let ok = y_ok && x_ok && printed_dev <= 0.025 && per_solve < Duration::from_millis(1);
    r.line(
        1,
        "worked example optimum",
        ok,
        format!(
            "y*={:.6} (oracle {:.6}), x=({:.4}, {:.4}, {:.4}), printed inputs within {:.2}%, {:?}/solve",
            d.target_yield,
            oracle_y,
            x[0],
            x[1],
            x[2],
            100.0 * printed_dev,
            per_solve
        ),
    );
}

fn random_farm(rng: &mut ChaCha8Rng, i: usize) -> FarmSpec {
    let n = rng.gen_range(1..=5);
    FarmSpec {
        farm_id: format!("f{i}"),
        potential_yield: rng.gen_range(4.0..12.0),
        stress_factors: (0..n)
            .map(|k| {
                let s = rng.gen_range(0.05..0.7);
                StressFactorParams::new(
                    format!("factor{k}"),
                    s,
                    s * rng.gen_range(0.6..1.0),
                    rng.gen_range(0.02..1.5),
                    rng.gen_range(0.5..30.0),
                )
            })
            .collect(),
        hectares: rng.gen_range(0.5..100.0),
        tractor_energy: 900.0,
    }
}

fn criterion_2(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let farms: Vec<FarmSpec> = (0..1000).map(|i| random_farm(&mut rng, i)).collect();
    let prices = Prices { wheat_price: 300.0 };
    let settings = SolverSettings::default();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut errors = 0;
    for f in &farms {
        match optimal_inputs(f, &prices, &settings) {
            Ok(d) => worst = worst.max(leveling_spread(&d, f).unwrap() / d.target_yield),
            Err(_) => errors += 1,
        }
    }
    let elapsed = start.elapsed();
    let ok = errors == 0 && worst <= 1e-6 && elapsed < Duration::from_secs(1);
    r.line(
        2,
        "leveling on random farms",
        ok,
        format!("max relative spread {worst:.2e} over 1000 farms, {errors} errors, {elapsed:?}"),
    );
}

fn criterion_3(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let settings = SolverSettings::default();
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 1000 {
        let yb = rng.gen_range(4.0..12.0);
        let s = rng.gen_range(0.05..0.8);
        let p = StressFactorParams::new(
            "only",
            s,
            s * rng.gen_range(0.5..1.0),
            rng.gen_range(0.02..1.5),
            rng.gen_range(0.5..30.0),
        );
        let prices = Prices { wheat_price: rng.gen_range(100.0..500.0) };
        // interior: the first unit of input pays for itself
        let arg = p.input_price / (prices.wheat_price * p.lambda * p.s_bar * yb);
        if arg >= 0.9 {
            continue;
        }
        let y_closed = yb * (1.0 + p.s_bar - p.s) - p.input_price / (prices.wheat_price * p.lambda);
        let x_closed = -arg.ln() / p.lambda;
        let farm = FarmSpec {
            farm_id: "one".into(),
            potential_yield: yb,
            stress_factors: vec![p.clone()],
            hectares: 1.0,
            tractor_energy: 0.0,
        };
        let d = optimal_inputs(&farm, &prices, &settings).unwrap();
        let (y_lib, x_lib) = one_factor_solution(&p, yb, &prices).unwrap();
        worst = worst
            .max(rel(d.target_yield, y_closed))
            .max(rel(d.inputs["only"], x_closed))
            .max(rel(y_lib, y_closed))
            .max(rel(x_lib, x_closed));
        tested += 1;
    }
    r.line(
        3,
        "one-factor closed form",
        worst <= 1e-8,
        format!("max relative difference {worst:.2e} over {tested} interior farms"),
    );
}

/// Significant-digit agreement: both values round to the same 4-digit mantissa.
fn same_4_digits(a: f64, b: f64) -> bool {
    format!("{a:.3e}") == format!("{b:.3e}")
}

fn criterion_4(r: &mut Report) {
    let table: [(&str, &str, f64, f64); 10] = [
        ("Global Warming", "Humans and Ecosystems", 943.1366, 8.752307e-04),
        ("Toxicity", "Humans - Carcinogenic", 1.1561, 3.838143e-06),
        ("Toxicity", "Humans - Non-carcinogenic", 0.2679, 6.108489e-08),
        ("Particulate Matter Formation", "Humans", 2.6462, 6.25e-11),
        ("Ozone Formation", "Humans", 3.3371, 3.036748e-06),
        ("Terrestrial Acidification", "Ecosystems", 15.9803, 3.387814e-06),
        ("Ozone Formation", "Ecosystems", 7.6806, 9.908018e-07),
        ("Freshwater Eutrophication", "Ecosystems", 0.0166, 1.114726e-08),
        ("Toxicity", "Ecosystems - Terrestrial", 185.9196, 2.119483e-09),
        ("Toxicity", "Ecosystems - Freshwater", 0.0606, 4.211711e-11),
    ];
    let outcome = (|| -> Result<(ImpactResult, ImpactResult), String> {
        let db = load_cf_database(&data("cf_database.csv")).map_err(|e| e.to_string())?;
        let methods = db
            .resolve_all(&load_method_list(&data("methods_table5.csv")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let inv = load_inventory(&data("inventory_table5.csv")).map_err(|e| e.to_string())?;
        let direct = assess(&inv, &methods).map_err(|e| e.to_string())?;
        let cfg = ScenarioConfig::load(&data("scenario_table5.toml")).map_err(|e| e.to_string())?;
        let run = Scenario::from_config(&cfg, LoadMode::Strict).and_then(|s| s.run()).map_err(|e| e.to_string())?;
        let farm = run.farms.first().ok_or("scenario produced no farm")?;
        Ok((direct, farm.impacts_per_ha.clone()))
    })();
    let (direct, scenario) = match outcome {
        Ok(v) => v,
        Err(e) => return r.line(4, "impact table", false, e),
    };
    let mut mismatches = Vec::new();
    for (label, result) in [("inventory", &direct), ("scenario", &scenario)] {
        for (method, target, mid, end) in table {
            match result.row(method, target) {
                Some(row) if same_4_digits(row.midpoint, mid) && same_4_digits(row.endpoint, end) => {}
                Some(row) => {
                    mismatches.push(format!("{label} {method} [{target}]: {} / {:e}", row.midpoint, row.endpoint))
                }
                None => mismatches.push(format!("{label} {method} [{target}]: missing")),
            }
        }
    }
    let ranks = rank_impacts(&direct);
    let top = |u: EndpointUnit| ranks.iter().find(|c| c.endpoint_unit == u).map(|c| c.top().method.clone());
    let daly_top = top(EndpointUnit::Daly);
    let species_top = top(EndpointUnit::SpeciesYear);
    let ranks_ok =
        daly_top.as_deref() == Some("Global Warming") && species_top.as_deref() == Some("Terrestrial Acidification");
    let ok = mismatches.is_empty() && ranks_ok && direct.rows.len() == 10;
    let detail = if ok {
        format!(
            "10 midpoints and endpoints to 4 significant digits from inventory and scenario; top DALY {}, top species.year {}",
            daly_top.unwrap_or_default(),
            species_top.unwrap_or_default()
        )
    } else {
        format!("mismatches {mismatches:?}; top DALY {daly_top:?}, top species.year {species_top:?}")
    };
    r.line(4, "impact table", ok, detail);
}

fn criterion_5(r: &mut Report) {
    let (herbicide, insecticide) = (0.54, 0.13);
    let expected = [
        ("Ecosystems - Terrestrial", 0.042 * herbicide + 0.378 * insecticide),
        ("Ecosystems - Freshwater", 0.359 * herbicide + 0.455 * insecticide),
        ("Ecosystems - Marine", 0.020 * herbicide + 0.038 * insecticide),
    ];
    let outcome = (|| -> Result<Vec<(String, f64, f64)>, String> {
        let db = load_cf_database(&data("cf_database.csv")).map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        for (target, want) in expected {
            let m = db
                .resolve(&MethodSelection::new("Toxicity", target, yieldgap::lca::Geography::Global))
                .map_err(|e| e.to_string())?;
            let c = m.emitted_to.unwrap_or(Compartment::IndustrialSoil);
            let inv: InventoryVector =
                [(ElementaryFlow::new("2,4-D", c), herbicide), (ElementaryFlow::new("Pirimicarb", c), insecticide)]
                    .into_iter()
                    .collect();
            let got = assess(&inv, &[m]).map_err(|e| e.to_string())?.rows[0].midpoint;
            out.push((target.to_string(), got, want));
        }
        Ok(out)
    })();
    match outcome {
        Ok(rows) => {
            let ok = rows.iter().all(|(_, got, want)| (got - want).abs() <= 1e-6)
                && [0.07182, 0.25301, 0.01574].iter().zip(&rows).all(|(v, (_, got, _))| (got - v).abs() <= 1e-6);
            let detail = rows
                .iter()
                .map(|(t, got, want)| format!("{t} {got:.5} (expected {want:.5})"))
                .collect::<Vec<_>>()
                .join(", ");
            r.line(5, "pesticide characterization", ok, detail);
        }
        Err(e) => r.line(5, "pesticide characterization", false, e),
    }
}

fn response(yb: f64, s: f64, s_bar: f64, lambda: f64, x: f64) -> f64 {
    yb * ((1.0 - s) + s_bar * (1.0 - (-lambda * x).exp()))
}

fn support(lambda: f64) -> [f64; 5] {
    let h = 1.0 / lambda;
    [0.0, 0.5 * h, h, 2.0 * h, 4.0 * h]
}

fn criterion_6(r: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let yb = 8.4;

    let mut noiseless_worst = 0.0f64;
    for case in 0..20 {
        let s = rng.gen_range(0.1..0.7);
        let (s_bar, lambda) = (s * rng.gen_range(0.5..1.0), rng.gen_range(0.03..1.2));
        let points: Vec<Point> =
            support(lambda).iter().map(|&x| Point::new(x, response(yb, s, s_bar, lambda, x))).collect();
        let set = ObservationSet { stratum: format!("c{case}"), points };
        let opts = CalibrationOptions { min_frontier: 5, potential_yield: Some(yb) };
        match calibrate_factor("f", &set, &opts) {
            Ok(fit) => {
                noiseless_worst = noiseless_worst
                    .max((fit.params.s - s).abs())
                    .max((fit.params.s_bar - s_bar).abs())
                    .max((fit.params.lambda - lambda).abs())
            }
            Err(_) => noiseless_worst = f64::INFINITY,
        }
    }

    // one-sided multiplicative noise: frontier yields fall short of the curve by up to 5%
    let (s, s_bar, lambda) = (0.5, 0.5, 0.06);
    let mut errors = Vec::with_capacity(100);
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Point> = support(lambda)
            .iter()
            .map(|&x| Point::new(x, response(yb, s, s_bar, lambda, x) * (1.0 + rng.gen_range(-0.05..0.0))))
            .collect();
        let e = match fit_conditional_yield(&points, Some(yb)) {
            Ok(fit) => rel(fit.params.s, s).max(rel(fit.params.s_bar, s_bar)).max(rel(fit.params.lambda, lambda)),
            Err(_) => f64::INFINITY,
        };
        errors.push(e);
    }
    errors.sort_by(f64::total_cmp);
    let median = 0.5 * (errors[49] + errors[50]);
    let elapsed = start.elapsed();
    let ok = noiseless_worst <= 1e-6 && median < 0.10 && elapsed < Duration::from_secs(10);
    r.line(
        6,
        "frontier calibration",
        ok,
        format!(
            "noiseless max error {noiseless_worst:.2e} over 20 curves; noisy median worst-parameter error {:.2}% over 100 seeds; {elapsed:?}",
            100.0 * median
        ),
    );
}

fn brute_cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn between(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Hull edges by exhaustive pair test: every other point lies strictly left
/// of `a → b` or on the closed segment.
fn brute_hull_edges(pts: &[Point]) -> Vec<(Point, Point)> {
    let mut edges = Vec::new();
    for &a in pts {
        for &b in pts {
            if a == b {
                continue;
            }
            let ok = pts.iter().all(|&q| {
                let c = brute_cross(a, b, q);
                c > 0.0 || (c == 0.0 && between(q, a, b))
            });
            if ok {
                edges.push((a, b));
            }
        }
    }
    edges
}

fn brute_undominated(pts: &[Point]) -> Vec<Point> {
    pts.iter().copied().filter(|&p| !pts.iter().any(|&q| q != p && q.x <= p.x && q.y >= p.y)).collect()
}

fn key(p: &Point) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

fn sorted(mut v: Vec<Point>) -> Vec<Point> {
    v.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    v.dedup();
    v
}

fn random_points(rng: &mut ChaCha8Rng, instance: usize) -> Vec<Point> {
    let n = rng.gen_range(3..=200);
    (0..n)
        .map(|_| match instance % 3 {
            // integer grid: many duplicates and collinear triples
            0 => Point::new(rng.gen_range(0..12) as f64, rng.gen_range(0..12) as f64),
            1 => {
                let x: f64 = rng.gen_range(0.0..100.0);
                Point::new(x, 8.0 * (1.0 - 0.5 * (-0.05 * x).exp()) * rng.gen_range(0.7..1.0))
            }
            _ => Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
        })
        .collect()
}

fn criterion_7(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut checked = 0;
    for instance in 0..200 {
        let pts = sorted(random_points(&mut rng, instance));
        let pareto = sorted(brute_undominated(&pts));
        if sorted(pareto_undominated(&pts)) != pareto {
            failures.push(format!("pareto #{instance}"));
        }
        let edges = brute_hull_edges(&pts);
        let collinear = pts.len() >= 3 && pts.iter().all(|&q| brute_cross(pts[0], pts[pts.len() - 1], q) == 0.0);
        if pts.len() < 3 {
            if convex_hull(&pts).is_ok() {
                failures.push(format!("hull #{instance} accepted {} points", pts.len()));
            }
            continue;
        }
        // vertices: edge endpoints that are not interior to a collinear run
        let vertices = sorted(
            edges
                .iter()
                .flat_map(|&(a, b)| [a, b])
                .filter(|&v| {
                    !edges.iter().any(|&(a, b)| a != v && b != v && brute_cross(a, b, v) == 0.0 && between(v, a, b))
                })
                .collect(),
        );
        let boundary: Vec<Point> = pts
            .iter()
            .copied()
            .filter(|&p| edges.iter().any(|&(a, b)| brute_cross(a, b, p) == 0.0 && between(p, a, b)))
            .collect();
        let boundary_keys: std::collections::BTreeSet<_> = boundary.iter().map(key).collect();
        let frontier: Vec<Point> = pareto.iter().copied().filter(|p| boundary_keys.contains(&key(p))).collect();

        match convex_hull(&pts) {
            Ok(h) => {
                let want = if collinear { vec![pts[0], pts[pts.len() - 1]] } else { vertices };
                if sorted(h.clone()) != want {
                    failures.push(format!("hull #{instance}"));
                }
                let ccw = h.len() < 3
                    || (0..h.len()).all(|i| brute_cross(h[i], h[(i + 1) % h.len()], h[(i + 2) % h.len()]) > 0.0);
                if !ccw {
                    failures.push(format!("hull #{instance} orientation"));
                }
            }
            Err(e) => failures.push(format!("hull #{instance}: {e}")),
        }
        match nw_frontier(&pts) {
            Ok(f) if sorted(f.clone()) == sorted(frontier.clone()) => {}
            _ => failures.push(format!("frontier #{instance}")),
        }
        checked += 1;
    }
    r.line(
        7,
        "hull and frontier vs brute force",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} instances of up to 200 points agree")
        } else {
            format!("{} disagreements: {:?}", failures.len(), failures)
        },
    );
}

fn criterion_8(r: &mut Report) {
    let outcome = (|| -> Result<f64, String> {
        let db = load_cf_database(&data("cf_database.csv")).map_err(|e| e.to_string())?;
        let methods = db
            .resolve_all(&load_method_list(&data("methods_table5.csv")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let flows: Vec<ElementaryFlow> = methods.iter().flat_map(|m| m.midpoint_cfs.keys().cloned()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let random_inventory = |rng: &mut ChaCha8Rng| -> InventoryVector {
            let mut inv = InventoryVector::new();
            for f in &flows {
                if rng.gen_bool(0.6) {
                    inv.add(f.clone(), rng.gen_range(0.0..100.0));
                }
            }
            inv
        };
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let a = 10f64.powf(rng.gen_range(-3.0..3.0));
            let i1 = random_inventory(&mut rng);
            let i2 = random_inventory(&mut rng);
            let mut sum = i1.clone();
            sum.merge(&i2);
            let r1 = assess(&i1, &methods).map_err(|e| e.to_string())?;
            let r2 = assess(&i2, &methods).map_err(|e| e.to_string())?;
            let rs = assess(&sum, &methods).map_err(|e| e.to_string())?;
            let ra = assess(&i1.scaled(a), &methods).map_err(|e| e.to_string())?;
            for k in 0..methods.len() {
                for endpoint in [false, true] {
                    let v = |res: &ImpactResult| {
                        if endpoint {
                            res.rows[k].endpoint
                        } else {
                            res.rows[k].midpoint
                        }
                    };
                    worst = worst.max(rel(v(&ra), a * v(&r1)));
                    worst = worst.max(rel(v(&rs), v(&r1) + v(&r2)));
                }
            }
        }
        Ok(worst)
    })();
    match outcome {
        Ok(worst) => r.line(
            8,
            "linearity of assessment",
            worst <= 1e-12,
            format!("max relative deviation {worst:.2e} over 200 scale and sum pairs"),
        ),
        Err(e) => r.line(8, "linearity of assessment", false, e),
    }
}

fn criterion_9(r: &mut Report) {
    let outcome = (|| -> Result<(bool, usize, Duration), String> {
        let start = Instant::now();
        let cfg = ScenarioConfig::load(&data("scenario_synthetic.toml")).map_err(|e| e.to_string())?;
        let mut scenario = Scenario::from_config(&cfg, LoadMode::Strict).map_err(|e| e.to_string())?;
        if scenario.farms.len() != 1000 {
            return Err(format!("population has {} farms", scenario.farms.len()));
        }
        let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
        scenario.settings.threads = 1;
        let one = scenario.run().map_err(|e| e.to_string())?;
        scenario.settings.threads = threads;
        let many = scenario.run().map_err(|e| e.to_string())?;
        let a = serde_json::to_string(&one.aggregates).map_err(|e| e.to_string())?;
        let b = serde_json::to_string(&many.aggregates).map_err(|e| e.to_string())?;
        let bits = |x: &yieldgap::simulation::Aggregates| {
            [x.hectares, x.total_profit, x.total_daly, x.total_species_year, x.mean_target_yield].map(f64::to_bits)
        };
        let same = a == b && bits(&one.aggregates) == bits(&many.aggregates) && one.farms == many.farms;
        Ok((same, threads, start.elapsed()))
    })();
    match outcome {
        Ok((same, threads, elapsed)) => r.line(
            9,
            "thread-count determinism",
            same && elapsed < Duration::from_secs(30),
            format!(
                "1 vs {threads} threads over 1000 farms bitwise {}; {elapsed:?}",
                if same { "identical" } else { "different" }
            ),
        ),
        Err(e) => r.line(9, "thread-count determinism", false, e),
    }
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", r.failed);
        ExitCode::FAILURE
    }
}
