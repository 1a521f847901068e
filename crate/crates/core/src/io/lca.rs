use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{fmt_f64, open, read_rows, IoError, LoadMode};
use crate::lca::{
    CfDatabase, Compartment, DamageCategory, ElementaryFlow, EndpointUnit, Geography, ImpactMethodSpec,
    InventoryVector, MethodKey, MethodSelection, Perspective, ProcessDataset, ProcessDb,
};

const CF_COLUMNS: &[&str] =
    &["method", "target", "category", "kind", "substance", "compartment", "value", "unit", "geography", "perspective"];

#[derive(Default)]
struct PendingMethod {
    first_line: u64,
    endpoint: Option<(DamageCategory, EndpointUnit, f64, Option<Compartment>)>,
    midpoint_unit: Option<String>,
    categories: Vec<(u64, DamageCategory)>,
    cfs: BTreeMap<ElementaryFlow, f64>,
}

fn perspective_of(text: &str) -> Result<Perspective, String> {
    if text.is_empty() {
        return Ok(Perspective::Hierarchist);
    }
    text.parse().map_err(|e: crate::lca::LcaError| e.to_string())
}

fn check_unit(slot: &mut Option<String>, unit: &str) -> Result<(), String> {
    match slot {
        Some(u) if u != unit => Err(format!("unit `{unit}` conflicts with `{u}` used earlier for this method")),
        Some(_) => Ok(()),
        None => {
            *slot = Some(unit.to_string());
            Ok(())
        }
    }
}

/// Country factors of one method: reference perspective and per-flow values.
type RegionalRows = (Option<String>, BTreeMap<ElementaryFlow, f64>);

/// Factor table: one row per characterization factor plus one `endpoint`
/// row per method carrying the damage category, endpoint unit, mid-to-end
/// factor and (in the compartment column) the compartment pesticide
/// emissions are booked to. Rows with geography `Italy` are regional
/// reference factors.
pub fn parse_cf_database<R: Read>(reader: R, source_name: &str) -> Result<CfDatabase, IoError> {
    let mut pending: BTreeMap<(MethodKey, Perspective), PendingMethod> = BTreeMap::new();
    let mut regional: BTreeMap<(MethodKey, Perspective), RegionalRows> = BTreeMap::new();

    read_rows(reader, source_name, CF_COLUMNS, LoadMode::Strict, |row| {
        let key = MethodKey::new(row.required("method")?, row.required("target")?);
        let perspective = perspective_of(row.text("perspective"))?;
        let geography: Geography =
            if row.text("geography").is_empty() { Geography::Global } else { row.parse("geography")? };
        let value = row.non_negative("value")?;
        let unit = row.required("unit")?;
        let category: Option<DamageCategory> = match row.text("category") {
            "" => None,
            _ => Some(row.parse("category")?),
        };
        match row.required("kind")? {
            "endpoint" => {
                if geography != Geography::Global {
                    return Err("endpoint rows must be global".into());
                }
                if !row.text("substance").is_empty() {
                    return Err("endpoint rows take no substance".into());
                }
                let category = category.ok_or("endpoint row needs a category")?;
                let endpoint_unit: EndpointUnit = row.parse("unit")?;
                let emitted_to = match row.text("compartment") {
                    "" => None,
                    _ => Some(row.parse("compartment")?),
                };
                let m = pending.entry((key, perspective)).or_default();
                if m.endpoint.is_some() {
                    return Err("duplicate endpoint row".into());
                }
                if m.first_line == 0 {
                    m.first_line = row.line;
                }
                m.endpoint = Some((category, endpoint_unit, value, emitted_to));
            }
            "midpoint" => {
                let flow = ElementaryFlow::new(row.required("substance")?, row.parse("compartment")?);
                let (slot, cfs) = match geography {
                    Geography::Global => {
                        let m = pending.entry((key, perspective)).or_default();
                        if m.first_line == 0 {
                            m.first_line = row.line;
                        }
                        if let Some(c) = category {
                            m.categories.push((row.line, c));
                        }
                        (&mut m.midpoint_unit, &mut m.cfs)
                    }
                    Geography::Italy => {
                        let r = regional.entry((key, perspective)).or_default();
                        (&mut r.0, &mut r.1)
                    }
                };
                check_unit(slot, unit)?;
                if cfs.insert(flow.clone(), value).is_some() {
                    return Err(format!("duplicate factor for {flow}"));
                }
            }
            other => return Err(format!("column `kind`: expected midpoint or endpoint, got `{other}`")),
        }
        Ok(())
    })?;

    let schema = |message: String| IoError::Schema { source_name: source_name.to_string(), message };
    let mut db = CfDatabase::new();
    for ((key, perspective), m) in pending {
        let (category, endpoint_unit, factor, emitted_to) =
            m.endpoint.ok_or_else(|| schema(format!("method {key} ({perspective}) has no endpoint row")))?;
        if let Some((line, c)) = m.categories.iter().find(|(_, c)| *c != category) {
            return Err(schema(format!(
                "line {line}: category {c} conflicts with endpoint category {category} of {key}"
            )));
        }
        db.insert_method(ImpactMethodSpec {
            name: key.name.clone(),
            target: key.target.clone(),
            damage_category: category,
            geography: Geography::Global,
            perspective,
            midpoint_unit: m.midpoint_unit.unwrap_or_default(),
            endpoint_unit,
            emitted_to,
            midpoint_cfs: m.cfs,
            mid_to_end_factor: factor,
        })
        .map_err(|e| schema(format!("line {}: {e}", m.first_line)))?;
    }
    for ((key, perspective), (unit, cfs)) in regional {
        let Some(global) = db.method(&key, perspective).or_else(|| db.method(&key, Perspective::Hierarchist)) else {
            return Err(schema(format!("regional factors for unknown method {key}")));
        };
        if unit.as_deref() != Some(global.midpoint_unit.as_str()) {
            return Err(schema(format!(
                "regional factors of {key} use unit {unit:?}, the method uses `{}`",
                global.midpoint_unit
            )));
        }
        for (flow, cf) in cfs {
            db.insert_regional_cf(key.clone(), perspective, flow, cf);
        }
    }
    Ok(db)
}

pub fn load_cf_database(path: &Path) -> Result<CfDatabase, IoError> {
    parse_cf_database(open(path)?, &path.display().to_string())
}

fn csv_err(e: impl std::fmt::Display) -> IoError {
    IoError::Serialize(e.to_string())
}

pub fn write_cf_database<W: Write>(db: &CfDatabase, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CF_COLUMNS).map_err(csv_err)?;
    for m in db.methods() {
        let category = m.damage_category.label();
        w.write_record([
            m.name.as_str(),
            &m.target,
            category,
            "endpoint",
            "",
            m.emitted_to.map_or("", |c| c.label()),
            &fmt_f64(m.mid_to_end_factor),
            m.endpoint_unit.label(),
            Geography::Global.label(),
            m.perspective.label(),
        ])
        .map_err(csv_err)?;
        for (flow, cf) in &m.midpoint_cfs {
            w.write_record([
                m.name.as_str(),
                &m.target,
                category,
                "midpoint",
                &flow.substance,
                flow.compartment.label(),
                &fmt_f64(*cf),
                &m.midpoint_unit,
                Geography::Global.label(),
                m.perspective.label(),
            ])
            .map_err(csv_err)?;
        }
    }
    for (key, perspective, cfs) in db.regional_entries() {
        let unit = db
            .method(key, perspective)
            .or_else(|| db.method(key, Perspective::Hierarchist))
            .map(|m| m.midpoint_unit.clone())
            .unwrap_or_default();
        for (flow, cf) in cfs {
            w.write_record([
                key.name.as_str(),
                &key.target,
                "",
                "midpoint",
                &flow.substance,
                flow.compartment.label(),
                &fmt_f64(*cf),
                &unit,
                Geography::Italy.label(),
                perspective.label(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

const PROCESS_COLUMNS: &[&str] = &[
    "process_id",
    "functional_unit_amount",
    "functional_unit",
    "exchange_kind",
    "target",
    "compartment",
    "amount",
    "unit",
];

/// Process table: one row per exchange. `exchange_kind` is `technosphere`
/// (target = supplying process, unit = its functional unit), `biosphere`
/// (target = substance, unit kg) or `reference` for a process with no
/// exchanges.
pub fn parse_process_db<R: Read>(reader: R, source_name: &str) -> Result<ProcessDb, IoError> {
    let mut db = ProcessDb::new();
    let mut tech_units: Vec<(u64, String, String, String)> = Vec::new();
    read_rows(reader, source_name, PROCESS_COLUMNS, LoadMode::Strict, |row| {
        let id = row.required("process_id")?;
        let fu = row.num("functional_unit_amount")?;
        let label = row.required("functional_unit")?;
        let p = db.processes.entry(id.to_string()).or_insert_with(|| ProcessDataset::new(id, fu, label));
        if p.functional_unit != fu || p.functional_unit_label != label {
            return Err(format!(
                "functional unit {fu} {label} conflicts with {} {} given earlier",
                p.functional_unit, p.functional_unit_label
            ));
        }
        match row.required("exchange_kind")? {
            "reference" => {}
            "technosphere" => {
                let target = row.required("target")?.to_string();
                let amount = row.num("amount")?;
                if p.technosphere_inputs.insert(target.clone(), amount).is_some() {
                    return Err(format!("duplicate input `{target}`"));
                }
                tech_units.push((row.line, id.to_string(), target, row.required("unit")?.to_string()));
            }
            "biosphere" => {
                let flow = ElementaryFlow::new(row.required("target")?, row.parse("compartment")?);
                let unit = row.required("unit")?;
                if unit != "kg" {
                    return Err(format!("biosphere exchanges are in kg, got `{unit}`"));
                }
                let amount = row.num("amount")?;
                if p.biosphere_exchanges.insert(flow.clone(), amount).is_some() {
                    return Err(format!("duplicate exchange {flow}"));
                }
            }
            other => return Err(format!("column `exchange_kind`: unknown kind `{other}`")),
        }
        Ok(())
    })?;
    let schema = |message: String| IoError::Schema { source_name: source_name.to_string(), message };
    for (line, id, target, unit) in tech_units {
        if let Some(t) = db.get(&target) {
            if t.functional_unit_label != unit {
                return Err(schema(format!(
                    "line {line}: `{id}` takes `{target}` in `{unit}` but it is measured in `{}`",
                    t.functional_unit_label
                )));
            }
        }
    }
    db.validate()?;
    Ok(db)
}

pub fn load_process_db(path: &Path) -> Result<ProcessDb, IoError> {
    parse_process_db(open(path)?, &path.display().to_string())
}

pub fn write_process_db<W: Write>(db: &ProcessDb, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PROCESS_COLUMNS).map_err(csv_err)?;
    for p in db.processes.values() {
        let fu = fmt_f64(p.functional_unit);
        if p.technosphere_inputs.is_empty() && p.biosphere_exchanges.is_empty() {
            w.write_record([p.process_id.as_str(), &fu, &p.functional_unit_label, "reference", "", "", "", ""])
                .map_err(csv_err)?;
        }
        for (target, q) in &p.technosphere_inputs {
            let unit = db.get(target).map_or("", |t| t.functional_unit_label.as_str());
            w.write_record([
                p.process_id.as_str(),
                &fu,
                &p.functional_unit_label,
                "technosphere",
                target,
                "",
                &fmt_f64(*q),
                unit,
            ])
            .map_err(csv_err)?;
        }
        for (flow, q) in &p.biosphere_exchanges {
            w.write_record([
                p.process_id.as_str(),
                &fu,
                &p.functional_unit_label,
                "biosphere",
                &flow.substance,
                flow.compartment.label(),
                &fmt_f64(*q),
                "kg",
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

/// Ordered list of method selections: `method,target,geography[,perspective]`.
pub fn parse_method_list<R: Read>(reader: R, source_name: &str) -> Result<Vec<MethodSelection>, IoError> {
    let mut out = Vec::new();
    read_rows(reader, source_name, &["method", "target", "geography"], LoadMode::Strict, |row| {
        out.push(MethodSelection {
            method: row.required("method")?.to_string(),
            target: row.required("target")?.to_string(),
            geography: row.parse("geography")?,
            perspective: perspective_of(row.text("perspective"))?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_method_list(path: &Path) -> Result<Vec<MethodSelection>, IoError> {
    parse_method_list(open(path)?, &path.display().to_string())
}

/// Elementary-flow inventory: `substance,compartment,amount,unit` with unit kg.
pub fn parse_inventory<R: Read>(reader: R, source_name: &str) -> Result<InventoryVector, IoError> {
    let mut inv = InventoryVector::new();
    read_rows(reader, source_name, &["substance", "compartment", "amount", "unit"], LoadMode::Strict, |row| {
        let flow = ElementaryFlow::new(row.required("substance")?, row.parse("compartment")?);
        if row.required("unit")? != "kg" {
            return Err(format!("inventory amounts are in kg, got `{}`", row.text("unit")));
        }
        if inv.flows.contains_key(&flow) {
            return Err(format!("duplicate flow {flow}"));
        }
        inv.add(flow, row.non_negative("amount")?);
        Ok(())
    })?;
    Ok(inv)
}

pub fn load_inventory(path: &Path) -> Result<InventoryVector, IoError> {
    parse_inventory(open(path)?, &path.display().to_string())
}

pub fn write_inventory<W: Write>(inv: &InventoryVector, writer: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["substance", "compartment", "amount", "unit"]).map_err(csv_err)?;
    for (flow, q) in inv.iter() {
        w.write_record([flow.substance.as_str(), flow.compartment.label(), &fmt_f64(q), "kg"]).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
