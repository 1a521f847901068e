use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use super::{open, read_rows, FarmRecord, IoError, LoadMode, Loaded, PesticideType};
use crate::calibration::{ObservationSet, Point};

/// stratum → factor → observations.
pub type Observations = BTreeMap<String, BTreeMap<String, ObservationSet>>;

/// Calibration observations: `stratum,factor,x,y`, one row per farm and factor.
pub fn parse_observations<R: Read>(
    reader: R,
    source_name: &str,
    mode: LoadMode,
) -> Result<Loaded<Observations>, IoError> {
    let mut out = Observations::new();
    let errors = read_rows(reader, source_name, &["stratum", "factor", "x", "y"], mode, |row| {
        let stratum = row.required("stratum")?;
        let factor = row.required("factor")?;
        let x = row.non_negative("x")?;
        let y = row.num("y")?;
        if y <= 0.0 {
            return Err(format!("column `y`: yield must be positive, got {y}"));
        }
        out.entry(stratum.to_string())
            .or_default()
            .entry(factor.to_string())
            .or_insert_with(|| ObservationSet { stratum: stratum.to_string(), points: Vec::new() })
            .points
            .push(Point::new(x, y));
        Ok(())
    })?;
    Ok(Loaded { records: vec![out], errors })
}

pub fn load_observations(path: &Path, mode: LoadMode) -> Result<Loaded<Observations>, IoError> {
    parse_observations(open(path)?, &path.display().to_string(), mode)
}

impl FarmRecord {
    /// Input quantity this record reports for a named stress factor:
    /// nitrogen for `nutrition`, herbicide for `weeds`, insecticide for `insects`.
    pub fn input_for(&self, factor: &str) -> Option<f64> {
        let pesticide = |t| self.pesticide(t).map_or(0.0, |p| p.quantity_kg_per_ha);
        match factor {
            "nutrition" => Some(self.nitrogen_kg_per_ha),
            "weeds" => Some(pesticide(PesticideType::Herbicide)),
            "insects" => Some(pesticide(PesticideType::Insecticide)),
            _ => None,
        }
    }
}

/// Groups farm records into calibration observations per stratum.
pub fn observations_from_records(records: &[FarmRecord], factors: &[&str]) -> Observations {
    let mut out = Observations::new();
    for r in records {
        for &f in factors {
            if let Some(x) = r.input_for(f) {
                out.entry(r.stratum.clone())
                    .or_default()
                    .entry(f.to_string())
                    .or_insert_with(|| ObservationSet { stratum: r.stratum.clone(), points: Vec::new() })
                    .points
                    .push(Point::new(x, r.yield_t_per_ha));
            }
        }
    }
    out
}
