//! Scenario configuration (TOML).
//!
//! ```toml
//! [prices]
//! wheat_price = 300.0
//!
//! [energy]
//! mj_per_tractor_hour = 150.0
//!
//! [data]
//! cf_db = "cf_database.csv"
//! process_db = "processes.csv"
//! methods = "methods.csv"
//! active_ingredients = "active_ingredients.csv"
//!
//! [processes]
//! tractor = "tractor_work"
//!
//! [[links]]
//! factor = "nutrition"
//! process = "nitrogen_fertilizer"
//!
//! [[links]]
//! factor = "weeds"
//! pesticide = "herbicide"
//! toxicity = "irritating"
//!
//! [population]
//! source = "file"
//! path = "farms.csv"
//! ```
//!
//! Relative paths resolve against the config file's directory, then against
//! the data directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{data_dir, IoError, PesticideType};
use crate::model::Prices;
use crate::optimizer::SolverSettings;
use crate::simulation::PopulationSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    /// Conversion from tractor hours to energy. No default: it must be stated.
    pub mj_per_tractor_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub cf_db: PathBuf,
    pub process_db: PathBuf,
    pub methods: PathBuf,
    #[serde(default)]
    pub active_ingredients: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    /// Process supplying one MJ of tractor work.
    pub tractor: String,
}

/// How a stress factor's input turns into process demand: either a process
/// consumed `per_unit` times the input quantity, or a pesticide class applied
/// at its active ingredient's default dose whenever the input is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorLinkConfig {
    pub factor: String,
    #[serde(default)]
    pub process: Option<String>,
    #[serde(default)]
    pub per_unit: Option<f64>,
    #[serde(default)]
    pub pesticide: Option<PesticideType>,
    #[serde(default)]
    pub toxicity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum PopulationSource {
    /// Farm-spec table.
    File {
        path: PathBuf,
    },
    Synthetic(PopulationSpec),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    /// Fixed per-factor inputs instead of optimizing.
    #[serde(default)]
    pub prescribed: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub prices: Prices,
    #[serde(default)]
    pub solver: SolverSettings,
    pub energy: EnergyConfig,
    pub data: DataConfig,
    pub processes: ProcessConfig,
    #[serde(default)]
    pub links: Vec<FactorLinkConfig>,
    pub population: PopulationSource,
    #[serde(default)]
    pub simulation: SimulationConfig,
}

fn resolve(base: &Path, p: &Path) -> Result<PathBuf, IoError> {
    let candidates = [Some(base.join(p)), data_dir().map(|d| d.join(p))];
    candidates
        .into_iter()
        .flatten()
        .find(|c| c.is_file())
        .ok_or_else(|| IoError::Config(format!("referenced file `{}` not found", p.display())))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses the file and makes every referenced path absolute, checking it exists.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IoError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data.cf_db = resolve(base, &cfg.data.cf_db)?;
        cfg.data.process_db = resolve(base, &cfg.data.process_db)?;
        cfg.data.methods = resolve(base, &cfg.data.methods)?;
        if let Some(ai) = &cfg.data.active_ingredients {
            cfg.data.active_ingredients = Some(resolve(base, ai)?);
        }
        if let PopulationSource::File { path } = &mut cfg.population {
            *path = resolve(base, path)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::Config(m));
        self.prices.validate().map_err(|e| IoError::Config(e.to_string()))?;
        self.solver.validate().map_err(|e| IoError::Config(e.to_string()))?;
        let e = self.energy.mj_per_tractor_hour;
        if !(e >= 0.0 && e.is_finite()) {
            return bad(format!("mj_per_tractor_hour must be >= 0, got {e}"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &self.links {
            if !seen.insert(&l.factor) {
                return bad(format!("factor `{}` is linked twice", l.factor));
            }
            match (&l.process, &l.pesticide) {
                (Some(_), None) => {
                    if l.toxicity.is_some() {
                        return bad(format!("link for `{}`: toxicity only applies to pesticides", l.factor));
                    }
                    if let Some(k) = l.per_unit {
                        if !(k >= 0.0 && k.is_finite()) {
                            return bad(format!("link for `{}`: per_unit must be >= 0", l.factor));
                        }
                    }
                }
                (None, Some(_)) => {
                    if l.toxicity.is_none() {
                        return bad(format!("link for `{}`: pesticide links need a toxicity", l.factor));
                    }
                    if self.data.active_ingredients.is_none() {
                        return bad("pesticide links need data.active_ingredients".into());
                    }
                }
                _ => return bad(format!("link for `{}` needs exactly one of process or pesticide", l.factor)),
            }
        }
        if let PopulationSource::Synthetic(spec) = &self.population {
            spec.validate().map_err(|e| IoError::Config(e.to_string()))?;
        }
        if let Some(p) = &self.simulation.prescribed {
            if let Some((k, v)) = p.iter().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
                return bad(format!("prescribed input `{k}` = {v} must be >= 0"));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
