//! Characterization, midpoint-to-endpoint conversion, regionalization and ranking.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    DamageCategory, ElementaryFlow, EndpointUnit, Geography, ImpactMethodSpec, InventoryVector, LcaError, Perspective,
};

/// Midpoint score plus the inventory flows the method has no factor for.
#[derive(Debug, Clone, PartialEq)]
pub struct Characterized {
    pub score: f64,
    pub uncharacterized: Vec<ElementaryFlow>,
}

/// `Σ quantity × CF` over the inventory. Flows without a factor contribute
/// nothing and are listed in [`Characterized::uncharacterized`].
pub fn characterize_midpoint(inv: &InventoryVector, m: &ImpactMethodSpec) -> Characterized {
    let mut score = 0.0;
    let mut uncharacterized = Vec::new();
    for (flow, q) in inv.iter() {
        match m.midpoint_cfs.get(flow) {
            Some(cf) => score += q * cf,
            None => uncharacterized.push(flow.clone()),
        }
    }
    Characterized { score, uncharacterized }
}

pub fn midpoint_to_endpoint(score: f64, m: &ImpactMethodSpec) -> Result<f64, LcaError> {
    m.validate()?;
    if !score.is_finite() {
        return Err(LcaError::InvalidInventory(format!("midpoint score {score} for {} is not finite", m.key())));
    }
    Ok(score * m.mid_to_end_factor)
}

/// Rescales a global method with country-specific reference factors.
///
/// Each characterized flow is multiplied by `italy / global` for that flow.
/// Flows without a reference pair use the aggregate ratio over the paired
/// flows (or 1 when there are none). The mid-to-end factor is left as is, so
/// the endpoint damage per kg of flow scales by the same ratio as the midpoint.
pub fn regionalize(
    m: &ImpactMethodSpec,
    italy: &BTreeMap<ElementaryFlow, f64>,
    global: &BTreeMap<ElementaryFlow, f64>,
) -> Result<ImpactMethodSpec, LcaError> {
    if !m.is_regionalizable() {
        return Err(LcaError::NotRegionalizable(m.key().to_string()));
    }
    let mut ratios: BTreeMap<&ElementaryFlow, f64> = BTreeMap::new();
    let (mut sum_it, mut sum_gl) = (0.0, 0.0);
    for (flow, &it) in italy {
        let Some(&gl) = global.get(flow) else { continue };
        if gl == 0.0 {
            if it != 0.0 {
                return Err(LcaError::Regionalization {
                    method: m.key().to_string(),
                    flow: flow.clone(),
                    regional: it,
                });
            }
            continue;
        }
        ratios.insert(flow, it / gl);
        sum_it += it;
        sum_gl += gl;
    }
    let fallback = if ratios.is_empty() || sum_gl == 0.0 { 1.0 } else { sum_it / sum_gl };

    let mut out = m.clone();
    for (flow, cf) in out.midpoint_cfs.iter_mut() {
        *cf *= ratios.get(flow).copied().unwrap_or(fallback);
    }
    out.geography = Geography::Italy;
    out.validate()?;
    Ok(out)
}

/// One row of an assessment: a method's midpoint and endpoint scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRow {
    pub method: String,
    pub target: String,
    pub damage_category: DamageCategory,
    pub geography: Geography,
    pub perspective: Perspective,
    pub midpoint: f64,
    pub midpoint_unit: String,
    pub endpoint: f64,
    pub endpoint_unit: EndpointUnit,
    /// Mid-to-end factor used, so `endpoint == midpoint * factor`.
    pub factor: f64,
}

impl ImpactRow {
    /// Method name with the geography appended for regional rows, e.g. "Particulate Matter (Italy)".
    pub fn label(&self) -> String {
        match self.geography {
            Geography::Global => self.method.clone(),
            g => format!("{} ({g})", self.method),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactResult {
    pub rows: Vec<ImpactRow>,
    /// Inventory flows that no assessed method characterizes.
    pub uncharacterized: Vec<ElementaryFlow>,
}

impl ImpactResult {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sum of endpoint scores for one unit.
    pub fn endpoint_total(&self, unit: EndpointUnit) -> f64 {
        self.rows.iter().filter(|r| r.endpoint_unit == unit).map(|r| r.endpoint).sum()
    }

    pub fn row(&self, method: &str, target: &str) -> Option<&ImpactRow> {
        self.rows.iter().find(|r| r.method == method && r.target == target)
    }
}

/// Scores the inventory under every method. Rows are grouped by endpoint
/// unit (DALY, species.year, USD) and keep the input order within a group.
pub fn assess(inv: &InventoryVector, methods: &[ImpactMethodSpec]) -> Result<ImpactResult, LcaError> {
    inv.validate()?;
    let mut rows = Vec::with_capacity(methods.len());
    let mut covered: BTreeSet<&ElementaryFlow> = BTreeSet::new();
    for m in methods {
        let c = characterize_midpoint(inv, m);
        let endpoint = midpoint_to_endpoint(c.score, m)?;
        covered.extend(m.midpoint_cfs.keys().filter(|f| inv.flows.contains_key(*f)));
        rows.push(ImpactRow {
            method: m.name.clone(),
            target: m.target.clone(),
            damage_category: m.damage_category,
            geography: m.geography,
            perspective: m.perspective,
            midpoint: c.score,
            midpoint_unit: m.midpoint_unit.clone(),
            endpoint,
            endpoint_unit: m.endpoint_unit,
            factor: m.mid_to_end_factor,
        });
    }
    rows.sort_by_key(|r| r.endpoint_unit);
    let uncharacterized = if methods.is_empty() {
        Vec::new()
    } else {
        inv.flows.keys().filter(|f| !covered.contains(f)).cloned().collect()
    };
    Ok(ImpactResult { rows, uncharacterized })
}

/// Rows of one endpoint unit, largest damage first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCategory {
    pub endpoint_unit: EndpointUnit,
    pub rows: Vec<ImpactRow>,
}

impl RankedCategory {
    pub fn top(&self) -> &ImpactRow {
        &self.rows[0]
    }
}

pub fn rank_impacts(result: &ImpactResult) -> Vec<RankedCategory> {
    let mut groups: BTreeMap<EndpointUnit, Vec<ImpactRow>> = BTreeMap::new();
    for r in &result.rows {
        groups.entry(r.endpoint_unit).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|(endpoint_unit, mut rows)| {
            rows.sort_by(|a, b| b.endpoint.total_cmp(&a.endpoint));
            RankedCategory { endpoint_unit, rows }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lca::Compartment;
    use proptest::prelude::*;

    fn flow(s: &str, c: Compartment) -> ElementaryFlow {
        ElementaryFlow::new(s, c)
    }

    fn method(name: &str, category: DamageCategory, cfs: &[(ElementaryFlow, f64)], factor: f64) -> ImpactMethodSpec {
        ImpactMethodSpec {
            name: name.into(),
            target: "t".into(),
            damage_category: category,
            geography: Geography::Global,
            perspective: Perspective::Hierarchist,
            midpoint_unit: "kg-eq".into(),
            endpoint_unit: category.endpoint_unit(),
            emitted_to: None,
            midpoint_cfs: cfs.iter().cloned().collect(),
            mid_to_end_factor: factor,
        }
    }

    fn ecotox(c: Compartment, d: f64, p: f64) -> ImpactMethodSpec {
        method(
            "Ecotoxicity",
            DamageCategory::EcosystemQuality,
            &[(flow("2,4-D", c), d), (flow("Pirimicarb", c), p)],
            1e-9,
        )
    }

    #[test]
    fn herbicide_terrestrial() {
        let m = ecotox(Compartment::IndustrialSoil, 0.042, 0.378);
        let inv: InventoryVector = [(flow("2,4-D", Compartment::IndustrialSoil), 0.54)].into_iter().collect();
        let c = characterize_midpoint(&inv, &m);
        assert!((c.score - 0.02268).abs() < 1e-12);
        assert!(c.uncharacterized.is_empty());
    }

    #[test]
    fn pesticides_freshwater() {
        let m = ecotox(Compartment::Freshwater, 0.359, 0.455);
        let inv: InventoryVector =
            [(flow("2,4-D", Compartment::Freshwater), 0.54), (flow("Pirimicarb", Compartment::Freshwater), 0.13)]
                .into_iter()
                .collect();
        assert!((characterize_midpoint(&inv, &m).score - 0.25301).abs() < 1e-12);
    }

    #[test]
    fn missing_factor_is_diagnosed() {
        let m = ecotox(Compartment::Freshwater, 0.359, 0.455);
        let other = flow("2,4-D", Compartment::Air);
        let inv: InventoryVector = [(other.clone(), 1.0)].into_iter().collect();
        let c = characterize_midpoint(&inv, &m);
        assert_eq!(c.score, 0.0);
        assert_eq!(c.uncharacterized, vec![other]);
        assert_eq!(characterize_midpoint(&InventoryVector::new(), &m).score, 0.0);
    }

    #[test]
    fn endpoint_ratios() {
        let gw = method("Global Warming", DamageCategory::HumanHealth, &[], 8.752307e-04 / 943.1366);
        let e = midpoint_to_endpoint(943.1366, &gw).unwrap();
        assert!((e / 8.752307e-04 - 1.0).abs() < 1e-12);
        let ta = method("Terrestrial Acidification", DamageCategory::EcosystemQuality, &[], 3.387814e-06 / 15.9803);
        let e = midpoint_to_endpoint(15.9803, &ta).unwrap();
        assert!((e / 3.387814e-06 - 1.0).abs() < 1e-12);
        assert_eq!(midpoint_to_endpoint(0.0, &ta).unwrap(), 0.0);
        let mut broken = ta.clone();
        broken.endpoint_unit = EndpointUnit::Daly;
        assert!(matches!(midpoint_to_endpoint(1.0, &broken), Err(LcaError::Configuration { .. })));
    }

    #[test]
    fn regionalize_ratio() {
        let so2 = flow("Sulfur dioxide", Compartment::Air);
        let nh3 = flow("Ammonia", Compartment::Air);
        let m = method(
            "Terrestrial Acidification",
            DamageCategory::EcosystemQuality,
            &[(so2.clone(), 2.0), (nh3.clone(), 4.0)],
            0.5,
        );
        let global: BTreeMap<_, _> = [(so2.clone(), 2.0)].into_iter().collect();
        let italy: BTreeMap<_, _> = [(so2.clone(), 3.0)].into_iter().collect();
        let r = regionalize(&m, &italy, &global).unwrap();
        assert_eq!(r.geography, Geography::Italy);
        assert_eq!(r.midpoint_cfs[&so2], 3.0);
        // no reference for NH3: aggregate ratio 1.5
        assert_eq!(r.midpoint_cfs[&nh3], 6.0);
        assert_eq!(r.mid_to_end_factor, 0.5);

        let same = regionalize(&m, &global, &global).unwrap();
        assert_eq!(same.midpoint_cfs, m.midpoint_cfs);
        let twice = regionalize(&same, &global, &global).unwrap();
        assert_eq!(twice, same);
    }

    #[test]
    fn regionalize_errors() {
        let so2 = flow("Sulfur dioxide", Compartment::Air);
        let m = method("Terrestrial Acidification", DamageCategory::EcosystemQuality, &[(so2.clone(), 1.0)], 1.0);
        let zero: BTreeMap<_, _> = [(so2.clone(), 0.0)].into_iter().collect();
        let one: BTreeMap<_, _> = [(so2.clone(), 1.0)].into_iter().collect();
        assert!(matches!(regionalize(&m, &one, &zero), Err(LcaError::Regionalization { .. })));
        let gw = method("Global Warming", DamageCategory::HumanHealth, &[(so2, 1.0)], 1.0);
        assert!(matches!(regionalize(&gw, &one, &one), Err(LcaError::NotRegionalizable(_))));
    }

    fn table_rows() -> Vec<ImpactMethodSpec> {
        let co2 = flow("Carbon dioxide", Compartment::Air);
        vec![
            method("Terrestrial Acidification", DamageCategory::EcosystemQuality, &[(co2.clone(), 2.0)], 1e-7),
            method("Global Warming", DamageCategory::HumanHealth, &[(co2.clone(), 1.0)], 1e-6),
            method("Ozone Formation", DamageCategory::HumanHealth, &[(co2.clone(), 0.1)], 1e-6),
            method("Ozone Formation", DamageCategory::EcosystemQuality, &[(co2, 0.1)], 1e-7),
        ]
    }

    #[test]
    fn rows_grouped_and_ranked() {
        let inv: InventoryVector = [(flow("Carbon dioxide", Compartment::Air), 10.0)].into_iter().collect();
        let res = assess(&inv, &table_rows()).unwrap();
        let units: Vec<_> = res.rows.iter().map(|r| r.endpoint_unit).collect();
        assert_eq!(
            units,
            [EndpointUnit::Daly, EndpointUnit::Daly, EndpointUnit::SpeciesYear, EndpointUnit::SpeciesYear]
        );
        assert_eq!(res.rows[0].method, "Global Warming");
        for r in &res.rows {
            assert_eq!(r.endpoint, r.midpoint * r.factor);
        }
        let ranked = rank_impacts(&res);
        assert_eq!(ranked.len(), 2);
        assert_eq!(ranked[0].top().method, "Global Warming");
        assert_eq!(ranked[1].top().method, "Terrestrial Acidification");
        assert!(assess(&inv, &[]).unwrap().is_empty());
    }

    fn inventory_strategy() -> impl Strategy<Value = InventoryVector> {
        prop::collection::vec((0usize..4, 0.0f64..100.0), 0..8).prop_map(|v| {
            let names = ["Carbon dioxide", "Ammonia", "Nitrogen oxides", "Methane"];
            v.into_iter().map(|(i, q)| (flow(names[i], Compartment::Air), q)).collect()
        })
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-300
    }

    proptest! {
        #[test]
        fn linear_in_scale(inv in inventory_strategy(), a in 1e-3f64..1e3) {
            let ms = table_rows();
            let base = assess(&inv, &ms).unwrap();
            let scaled = assess(&inv.scaled(a), &ms).unwrap();
            for (r, s) in base.rows.iter().zip(&scaled.rows) {
                prop_assert!(close(s.midpoint, a * r.midpoint));
                prop_assert!(close(s.endpoint, a * r.endpoint));
            }
        }

        #[test]
        fn additive(a in inventory_strategy(), b in inventory_strategy()) {
            let ms = table_rows();
            let ra = assess(&a, &ms).unwrap();
            let rb = assess(&b, &ms).unwrap();
            let rab = assess(&(&a + &b), &ms).unwrap();
            for ((x, y), z) in ra.rows.iter().zip(&rb.rows).zip(&rab.rows) {
                prop_assert!(close(z.midpoint, x.midpoint + y.midpoint));
                prop_assert!(close(z.endpoint, x.endpoint + y.endpoint));
            }
        }
    }
}
