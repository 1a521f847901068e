//! In-memory store of impact methods and country-specific reference factors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{regionalize, ElementaryFlow, Geography, ImpactMethodSpec, LcaError, MethodKey, Perspective};

/// Which method variant to score with.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodSelection {
    pub method: String,
    pub target: String,
    pub geography: Geography,
    #[serde(default = "default_perspective")]
    pub perspective: Perspective,
}

fn default_perspective() -> Perspective {
    Perspective::Hierarchist
}

impl MethodSelection {
    pub fn new(method: impl Into<String>, target: impl Into<String>, geography: Geography) -> Self {
        Self { method: method.into(), target: target.into(), geography, perspective: Perspective::Hierarchist }
    }

    pub fn key(&self) -> MethodKey {
        MethodKey::new(self.method.clone(), self.target.clone())
    }
}

/// Global methods per perspective, plus Italian reference factors used to
/// regionalize them on request.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CfDatabase {
    methods: BTreeMap<(MethodKey, Perspective), ImpactMethodSpec>,
    regional: BTreeMap<(MethodKey, Perspective), BTreeMap<ElementaryFlow, f64>>,
}

impl CfDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a global method, replacing any previous one with the same key and perspective.
    pub fn insert_method(&mut self, m: ImpactMethodSpec) -> Result<(), LcaError> {
        m.validate()?;
        if m.geography != Geography::Global {
            return Err(LcaError::Configuration {
                method: m.key().to_string(),
                reason: "stored methods must be global; regional factors go in the reference table".into(),
            });
        }
        self.methods.insert((m.key(), m.perspective), m);
        Ok(())
    }

    /// Sets one Italian reference factor.
    pub fn insert_regional_cf(&mut self, key: MethodKey, perspective: Perspective, flow: ElementaryFlow, cf: f64) {
        self.regional.entry((key, perspective)).or_default().insert(flow, cf);
    }

    pub fn method(&self, key: &MethodKey, perspective: Perspective) -> Option<&ImpactMethodSpec> {
        self.methods.get(&(key.clone(), perspective))
    }

    pub fn methods(&self) -> impl Iterator<Item = &ImpactMethodSpec> {
        self.methods.values()
    }

    /// Italian reference factors for a method, falling back to the Hierarchist set.
    pub fn regional_cfs(&self, key: &MethodKey, perspective: Perspective) -> Option<&BTreeMap<ElementaryFlow, f64>> {
        self.regional
            .get(&(key.clone(), perspective))
            .or_else(|| self.regional.get(&(key.clone(), Perspective::Hierarchist)))
    }

    pub fn regional_entries(&self) -> impl Iterator<Item = (&MethodKey, Perspective, &BTreeMap<ElementaryFlow, f64>)> {
        self.regional.iter().map(|((k, p), cfs)| (k, *p, cfs))
    }

    /// Characterization factor of `flow` in a global method, if any.
    pub fn cf(&self, key: &MethodKey, perspective: Perspective, flow: &ElementaryFlow) -> Option<f64> {
        self.method(key, perspective)?.midpoint_cfs.get(flow).copied()
    }

    pub fn len(&self) -> usize {
        self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.methods.is_empty() && self.regional.is_empty()
    }

    /// Builds the method to score with, regionalizing when Italy is requested.
    pub fn resolve(&self, sel: &MethodSelection) -> Result<ImpactMethodSpec, LcaError> {
        let key = sel.key();
        let global = self
            .method(&key, sel.perspective)
            .ok_or_else(|| LcaError::UnknownMethod(format!("{key} ({})", sel.perspective)))?;
        match sel.geography {
            Geography::Global => Ok(global.clone()),
            Geography::Italy => {
                let italy = self.regional_cfs(&key, sel.perspective).ok_or_else(|| LcaError::Configuration {
                    method: key.to_string(),
                    reason: "no Italian reference factors".into(),
                })?;
                regionalize(global, italy, &global.midpoint_cfs)
            }
        }
    }

    pub fn resolve_all(&self, selections: &[MethodSelection]) -> Result<Vec<ImpactMethodSpec>, LcaError> {
        selections.iter().map(|s| self.resolve(s)).collect()
    }
}
