use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{fmt_f64, open, read_rows, IoError, LoadMode, Loaded, RowError};
use crate::model::{FarmSpec, StressFactorParams};

pub const FARM_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PesticideType {
    Herbicide,
    Insecticide,
    Fungicide,
}

impl PesticideType {
    pub const ALL: [PesticideType; 3] = [Self::Herbicide, Self::Insecticide, Self::Fungicide];

    pub fn label(self) -> &'static str {
        match self {
            Self::Herbicide => "herbicide",
            Self::Insecticide => "insecticide",
            Self::Fungicide => "fungicide",
        }
    }
}

impl fmt::Display for PesticideType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PesticideType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown pesticide type `{s}`"))
    }
}

/// One pesticide class applied on a farm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PesticideEntry {
    pub pesticide_type: PesticideType,
    /// Label-class toxicity, e.g. "irritating" or "toxic".
    pub toxicity_level: String,
    pub quantity_kg_per_ha: f64,
}

/// One farm in one year, as recorded in an accounting survey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmRecord {
    pub schema_version: u32,
    pub farm_id: String,
    pub year: i32,
    pub stratum: String,
    pub hectares: f64,
    pub tractor_hours_per_ha: f64,
    pub nitrogen_kg_per_ha: f64,
    pub phosphorus_kg_per_ha: f64,
    pub potassium_kg_per_ha: f64,
    pub pesticides: Vec<PesticideEntry>,
    pub yield_t_per_ha: f64,
}

impl FarmRecord {
    pub fn tractor_energy_mj_per_ha(&self, mj_per_hour: f64) -> f64 {
        self.tractor_hours_per_ha * mj_per_hour
    }

    pub fn pesticide(&self, t: PesticideType) -> Option<&PesticideEntry> {
        self.pesticides.iter().find(|p| p.pesticide_type == t)
    }
}

const FARM_COLUMNS: &[&str] = &[
    "schema_version",
    "farm_id",
    "year",
    "stratum",
    "hectares",
    "tractor_hours_per_ha",
    "nitrogen_kg_per_ha",
    "phosphorus_kg_per_ha",
    "potassium_kg_per_ha",
    "herbicide_toxicity",
    "herbicide_kg_per_ha",
    "insecticide_toxicity",
    "insecticide_kg_per_ha",
    "fungicide_toxicity",
    "fungicide_kg_per_ha",
    "yield_t_per_ha",
];

pub fn parse_farm_records<R: Read>(
    reader: R,
    source_name: &str,
    schema_version: u32,
    mode: LoadMode,
) -> Result<Loaded<FarmRecord>, IoError> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    let errors = read_rows(reader, source_name, FARM_COLUMNS, mode, |row| {
        let version: u32 = row.parse("schema_version")?;
        if version != schema_version {
            return Err(format!("schema version {version}, expected {schema_version}"));
        }
        let farm_id = row.required("farm_id")?.to_string();
        let year: i32 = row.parse("year")?;
        let hectares = row.num("hectares")?;
        if hectares <= 0.0 {
            return Err(format!("column `hectares`: must be positive, got {hectares}"));
        }
        let mut pesticides = Vec::new();
        for t in PesticideType::ALL {
            let tox_col = format!("{t}_toxicity");
            let kg_col = format!("{t}_kg_per_ha");
            let toxicity = row.text(&tox_col);
            let quantity = row.opt_non_negative(&kg_col)?;
            match (toxicity.is_empty(), quantity) {
                (true, None) => {}
                (true, Some(0.0)) => {}
                (false, Some(q)) => pesticides.push(PesticideEntry {
                    pesticide_type: t,
                    toxicity_level: toxicity.to_string(),
                    quantity_kg_per_ha: q,
                }),
                (true, Some(_)) => return Err(format!("{t} quantity given without a toxicity level")),
                (false, None) => return Err(format!("{t} toxicity given without a quantity")),
            }
        }
        let yield_t_per_ha = row.num("yield_t_per_ha")?;
        if yield_t_per_ha <= 0.0 {
            return Err(format!("column `yield_t_per_ha`: must be positive, got {yield_t_per_ha}"));
        }
        let record = FarmRecord {
            schema_version: version,
            farm_id,
            year,
            stratum: row.required("stratum")?.to_string(),
            hectares,
            tractor_hours_per_ha: row.non_negative("tractor_hours_per_ha")?,
            nitrogen_kg_per_ha: row.non_negative("nitrogen_kg_per_ha")?,
            phosphorus_kg_per_ha: row.non_negative("phosphorus_kg_per_ha")?,
            potassium_kg_per_ha: row.non_negative("potassium_kg_per_ha")?,
            pesticides,
            yield_t_per_ha,
        };
        if !seen.insert((record.farm_id.clone(), record.year)) {
            return Err(format!("duplicate record for farm `{}` in {}", record.farm_id, record.year));
        }
        records.push(record);
        Ok(())
    })?;
    Ok(Loaded { records, errors })
}

pub fn load_farm_records(path: &Path, schema_version: u32, mode: LoadMode) -> Result<Loaded<FarmRecord>, IoError> {
    parse_farm_records(open(path)?, &path.display().to_string(), schema_version, mode)
}

/// Active ingredient standing for one (pesticide type, toxicity) class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveIngredient {
    pub pesticide_type: PesticideType,
    pub toxicity_level: String,
    pub ingredient: String,
    pub dose_min_g_per_ha: f64,
    pub dose_max_g_per_ha: f64,
    pub default_dose_g_per_ha: f64,
    /// Process dataset describing one kg of the ingredient applied.
    pub process_id: String,
}

impl ActiveIngredient {
    pub fn validate(&self) -> Result<(), String> {
        let (lo, hi, d) = (self.dose_min_g_per_ha, self.dose_max_g_per_ha, self.default_dose_g_per_ha);
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(format!("dose range [{lo}, {hi}] g/ha is invalid"));
        }
        if !(lo..=hi).contains(&d) {
            return Err(format!("default dose {d} g/ha lies outside [{lo}, {hi}]"));
        }
        if self.ingredient.is_empty() {
            return Err("ingredient name is empty".into());
        }
        Ok(())
    }

    pub fn default_dose_kg_per_ha(&self) -> f64 {
        self.default_dose_g_per_ha / 1000.0
    }
}

/// (pesticide type, toxicity level) → active ingredient. Toxicity matching is
/// case-insensitive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActiveIngredientMap {
    entries: BTreeMap<(PesticideType, String), ActiveIngredient>,
}

impl ActiveIngredientMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: ActiveIngredient) -> Result<(), String> {
        a.validate()?;
        self.entries.insert((a.pesticide_type, a.toxicity_level.to_lowercase()), a);
        Ok(())
    }

    pub fn get(&self, t: PesticideType, toxicity: &str) -> Option<&ActiveIngredient> {
        self.entries.get(&(t, toxicity.trim().to_lowercase()))
    }

    pub fn by_ingredient(&self, ingredient: &str) -> Option<&ActiveIngredient> {
        self.entries.values().find(|a| a.ingredient == ingredient)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActiveIngredient> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

const AI_COLUMNS: &[&str] = &[
    "type",
    "toxicity_level",
    "ingredient",
    "dose_min_g_per_ha",
    "dose_max_g_per_ha",
    "default_dose_g_per_ha",
    "process_id",
];

pub fn parse_active_ingredients<R: Read>(reader: R, source_name: &str) -> Result<ActiveIngredientMap, IoError> {
    let mut map = ActiveIngredientMap::new();
    read_rows(reader, source_name, AI_COLUMNS, LoadMode::Strict, |row| {
        let min = row.non_negative("dose_min_g_per_ha")?;
        let max = row.non_negative("dose_max_g_per_ha")?;
        // the default dose falls back to the middle of the range
        let default = row.opt_non_negative("default_dose_g_per_ha")?.unwrap_or(0.5 * (min + max));
        let a = ActiveIngredient {
            pesticide_type: row.parse("type")?,
            toxicity_level: row.required("toxicity_level")?.to_string(),
            ingredient: row.required("ingredient")?.to_string(),
            dose_min_g_per_ha: min,
            dose_max_g_per_ha: max,
            default_dose_g_per_ha: default,
            process_id: row.required("process_id")?.to_string(),
        };
        if map.get(a.pesticide_type, &a.toxicity_level).is_some() {
            return Err(format!("duplicate mapping for {} / {}", a.pesticide_type, a.toxicity_level));
        }
        map.insert(a)
    })?;
    Ok(map)
}

pub fn load_active_ingredients(path: &Path) -> Result<ActiveIngredientMap, IoError> {
    parse_active_ingredients(open(path)?, &path.display().to_string())
}

/// Active-ingredient mass per hectare for each pesticide the record applies.
///
/// A pesticide class with a positive recorded quantity is applied at its
/// ingredient's default dose.
pub fn resolve_active_ingredients(
    record: &FarmRecord,
    map: &ActiveIngredientMap,
) -> Result<BTreeMap<String, f64>, IoError> {
    let mut out = BTreeMap::new();
    let mut unmapped = Vec::new();
    for p in record.pesticides.iter().filter(|p| p.quantity_kg_per_ha > 0.0) {
        match map.get(p.pesticide_type, &p.toxicity_level) {
            Some(a) => *out.entry(a.ingredient.clone()).or_insert(0.0) += a.default_dose_kg_per_ha(),
            None => unmapped.push(format!("{} / {} (farm {})", p.pesticide_type, p.toxicity_level, record.farm_id)),
        }
    }
    if !unmapped.is_empty() {
        return Err(IoError::Resolution(unmapped));
    }
    Ok(out)
}

/// Processes standing for a farm record's recorded inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordProcesses {
    /// Supplies one MJ of tractor work.
    pub tractor: String,
    /// Supplies one kg of nitrogen applied.
    pub nitrogen: String,
    pub mj_per_tractor_hour: f64,
}

/// Per-hectare process demand of a farm record: tractor energy, nitrogen and
/// the active ingredients of its pesticides.
pub fn record_demand(
    record: &FarmRecord,
    map: &ActiveIngredientMap,
    processes: &RecordProcesses,
) -> Result<BTreeMap<String, f64>, IoError> {
    let mut demand = BTreeMap::new();
    let energy = record.tractor_energy_mj_per_ha(processes.mj_per_tractor_hour);
    if energy > 0.0 {
        demand.insert(processes.tractor.clone(), energy);
    }
    if record.nitrogen_kg_per_ha > 0.0 {
        *demand.entry(processes.nitrogen.clone()).or_insert(0.0) += record.nitrogen_kg_per_ha;
    }
    for (ingredient, kg) in resolve_active_ingredients(record, map)? {
        let a = map.by_ingredient(&ingredient).expect("resolved ingredients are mapped");
        *demand.entry(a.process_id.clone()).or_insert(0.0) += kg;
    }
    Ok(demand)
}

const SPEC_COLUMNS: &[&str] = &[
    "farm_id",
    "potential_yield_t_per_ha",
    "hectares",
    "tractor_energy_mj_per_ha",
    "factor",
    "s",
    "s_bar",
    "lambda",
    "input_price",
];

/// Farm specifications, one row per (farm, stress factor). Farm-level
/// columns must agree across a farm's rows. Farms keep file order.
pub fn parse_farm_specs<R: Read>(reader: R, source_name: &str, mode: LoadMode) -> Result<Loaded<FarmSpec>, IoError> {
    let mut farms: Vec<(u64, FarmSpec)> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut errors = read_rows(reader, source_name, SPEC_COLUMNS, mode, |row| {
        let farm_id = row.required("farm_id")?.to_string();
        let potential_yield = row.num("potential_yield_t_per_ha")?;
        let hectares = row.num("hectares")?;
        let tractor_energy = row.non_negative("tractor_energy_mj_per_ha")?;
        let mut factor = StressFactorParams::new(
            row.required("factor")?,
            row.num("s")?,
            row.num("s_bar")?,
            row.num("lambda")?,
            row.non_negative("input_price")?,
        );
        if !row.text("input_unit").is_empty() {
            factor.input_unit = row.text("input_unit").to_string();
        }
        factor.validate().map_err(|e| e.to_string())?;
        match index.get(&farm_id) {
            Some(&i) => {
                let spec = &mut farms[i].1;
                if spec.potential_yield != potential_yield
                    || spec.hectares != hectares
                    || spec.tractor_energy != tractor_energy
                {
                    return Err(format!("farm-level columns of `{farm_id}` disagree with its first row"));
                }
                if spec.factor(&factor.name).is_some() {
                    return Err(format!("duplicate factor `{}` for farm `{farm_id}`", factor.name));
                }
                spec.stress_factors.push(factor);
            }
            None => {
                index.insert(farm_id.clone(), farms.len());
                farms.push((
                    row.line,
                    FarmSpec { farm_id, potential_yield, stress_factors: vec![factor], hectares, tractor_energy },
                ));
            }
        }
        Ok(())
    })?;
    let mut records = Vec::with_capacity(farms.len());
    for (line, spec) in farms {
        match spec.validate() {
            Ok(()) => records.push(spec),
            Err(e) if mode == LoadMode::Strict => {
                return Err(IoError::Row { source_name: source_name.to_string(), line, message: e.to_string() })
            }
            Err(e) => errors.push(RowError { line, message: e.to_string() }),
        }
    }
    errors.sort_by_key(|e| e.line);
    Ok(Loaded { records, errors })
}

pub fn load_farm_specs(path: &Path, mode: LoadMode) -> Result<Loaded<FarmSpec>, IoError> {
    parse_farm_specs(open(path)?, &path.display().to_string(), mode)
}

pub fn write_farm_specs<W: Write>(farms: &[FarmSpec], writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| IoError::Serialize(e.to_string());
    w.write_record(SPEC_COLUMNS.iter().copied().chain(["input_unit"])).map_err(ser)?;
    for farm in farms {
        for f in &farm.stress_factors {
            w.write_record([
                farm.farm_id.clone(),
                fmt_f64(farm.potential_yield),
                fmt_f64(farm.hectares),
                fmt_f64(farm.tractor_energy),
                f.name.clone(),
                fmt_f64(f.s),
                fmt_f64(f.s_bar),
                fmt_f64(f.lambda),
                fmt_f64(f.input_price),
                f.input_unit.clone(),
            ])
            .map_err(ser)?;
        }
    }
    w.flush().map_err(|e| IoError::Serialize(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "schema_version,farm_id,year,stratum,hectares,tractor_hours_per_ha,nitrogen_kg_per_ha,phosphorus_kg_per_ha,potassium_kg_per_ha,herbicide_toxicity,herbicide_kg_per_ha,insecticide_toxicity,insecticide_kg_per_ha,fungicide_toxicity,fungicide_kg_per_ha,yield_t_per_ha\n";

    fn table2() -> ActiveIngredientMap {
        let mut m = ActiveIngredientMap::new();
        m.insert(ActiveIngredient {
            pesticide_type: PesticideType::Herbicide,
            toxicity_level: "irritating".into(),
            ingredient: "2,4-D".into(),
            dose_min_g_per_ha: 360.0,
            dose_max_g_per_ha: 720.0,
            default_dose_g_per_ha: 540.0,
            process_id: "herbicide_2_4_d".into(),
        })
        .unwrap();
        m.insert(ActiveIngredient {
            pesticide_type: PesticideType::Insecticide,
            toxicity_level: "toxic".into(),
            ingredient: "Pirimicarb".into(),
            dose_min_g_per_ha: 130.0,
            dose_max_g_per_ha: 130.0,
            default_dose_g_per_ha: 130.0,
            process_id: "insecticide_pirimicarb".into(),
        })
        .unwrap();
        m
    }

    #[test]
    fn one_valid_row() {
        let data = format!("{HEADER}1,F1,2015,hills,1,6,50,0,0,irritating,0.54,toxic,0.13,,,5.2\n");
        let out = parse_farm_records(data.as_bytes(), "t", 1, LoadMode::Strict).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!(r.pesticides.len(), 2);
        assert_eq!(r.tractor_energy_mj_per_ha(150.0), 900.0);
        let ai = resolve_active_ingredients(r, &table2()).unwrap();
        assert!((ai["2,4-D"] - 0.54).abs() < 1e-15);
        assert!((ai["Pirimicarb"] - 0.13).abs() < 1e-15);
    }

    #[test]
    fn negative_hectares_rejected_with_line() {
        let data = format!("{HEADER}1,F1,2015,hills,1,6,50,0,0,,,,,,,5.2\n1,F2,2015,hills,-2,6,50,0,0,,,,,,,5.2\n");
        let out = parse_farm_records(data.as_bytes(), "t", 1, LoadMode::Lenient).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].line, 3);
        assert!(out.errors[0].message.contains("hectares"));
        assert!(parse_farm_records(data.as_bytes(), "t", 1, LoadMode::Strict).is_err());
    }

    #[test]
    fn wrong_schema_and_duplicates() {
        let data = format!(
            "{HEADER}2,F1,2015,h,1,6,50,0,0,,,,,,,5\n1,F1,2015,h,1,6,50,0,0,,,,,,,5\n1,F1,2015,h,1,6,50,0,0,,,,,,,5\n1,F1,2016,h,1,6,-1,0,0,,,,,,,5\n"
        );
        let out = parse_farm_records(data.as_bytes(), "t", 1, LoadMode::Lenient).unwrap();
        assert_eq!(out.records.len(), 1);
        let lines: Vec<u64> = out.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 4, 5]);
    }

    #[test]
    fn unknown_pesticide_class_fails_resolution() {
        let data = format!("{HEADER}1,F1,2015,h,1,6,50,0,0,,,,,very toxic,0.2,5\n");
        let out = parse_farm_records(data.as_bytes(), "t", 1, LoadMode::Strict).unwrap();
        match resolve_active_ingredients(&out.records[0], &table2()) {
            Err(IoError::Resolution(v)) => assert!(v[0].contains("fungicide / very toxic")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn default_dose_must_be_in_range() {
        let data = "type,toxicity_level,ingredient,dose_min_g_per_ha,dose_max_g_per_ha,default_dose_g_per_ha,process_id\nherbicide,irritating,\"2,4-D\",360,720,800,p\n";
        assert!(parse_active_ingredients(data.as_bytes(), "t").is_err());
        let quoted = "type,toxicity_level,ingredient,dose_min_g_per_ha,dose_max_g_per_ha,default_dose_g_per_ha,process_id\nherbicide,Irritating,\"2,4-D\",360,720,,p\n";
        let m = parse_active_ingredients(quoted.as_bytes(), "t").unwrap();
        assert_eq!(m.get(PesticideType::Herbicide, "irritating").unwrap().default_dose_g_per_ha, 540.0);
    }

    #[test]
    fn farm_specs_round_trip() {
        let data = "farm_id,potential_yield_t_per_ha,hectares,tractor_energy_mj_per_ha,factor,s,s_bar,lambda,input_price,input_unit\n\
            A,8.4,1,900,nutrition,0.5,0.5,0.06,1.5,kg N/ha\n\
            A,8.4,1,900,weeds,0.4,0.4,0.5,10,\n\
            B,8.4,1,900,weeds,1.4,0.4,0.5,10,\n\
            C,8.4,2,900,insects,0.3,0.3,0.7,10,\n";
        let out = parse_farm_specs(data.as_bytes(), "t", LoadMode::Lenient).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].line, 4);
        let mut buf = Vec::new();
        write_farm_specs(&out.records, &mut buf).unwrap();
        let again = parse_farm_specs(buf.as_slice(), "t", LoadMode::Strict).unwrap();
        assert_eq!(again.records, out.records);
    }
}
