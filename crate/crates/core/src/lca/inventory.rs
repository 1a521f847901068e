//! Technosphere expansion of a demand into an elementary-flow inventory.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{flow_map, ElementaryFlow, InventoryVector, LcaError};

/// One unit process: what it needs from other processes and what it
/// exchanges with the environment, per functional unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessDataset {
    pub process_id: String,
    /// Size of the reference output the exchanges refer to.
    pub functional_unit: f64,
    /// e.g. "kg N" or "MJ".
    pub functional_unit_label: String,
    pub technosphere_inputs: BTreeMap<String, f64>,
    #[serde(with = "flow_map")]
    pub biosphere_exchanges: BTreeMap<ElementaryFlow, f64>,
}

impl ProcessDataset {
    pub fn new(process_id: impl Into<String>, functional_unit: f64, label: impl Into<String>) -> Self {
        Self {
            process_id: process_id.into(),
            functional_unit,
            functional_unit_label: label.into(),
            technosphere_inputs: BTreeMap::new(),
            biosphere_exchanges: BTreeMap::new(),
        }
    }

    pub fn with_input(mut self, process_id: impl Into<String>, amount: f64) -> Self {
        self.technosphere_inputs.insert(process_id.into(), amount);
        self
    }

    pub fn with_exchange(mut self, flow: ElementaryFlow, amount: f64) -> Self {
        self.biosphere_exchanges.insert(flow, amount);
        self
    }

    fn validate(&self) -> Result<(), LcaError> {
        let bad = |reason: String| LcaError::InvalidProcess { process: self.process_id.clone(), reason };
        if !(self.functional_unit > 0.0 && self.functional_unit.is_finite()) {
            return Err(bad(format!("functional unit must be > 0, got {}", self.functional_unit)));
        }
        for (p, &q) in &self.technosphere_inputs {
            if !q.is_finite() {
                return Err(bad(format!("non-finite input amount for `{p}`")));
            }
        }
        for (f, &q) in &self.biosphere_exchanges {
            if !q.is_finite() {
                return Err(bad(format!("non-finite exchange for {f}")));
            }
        }
        Ok(())
    }
}

/// An immutable store of process datasets keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcessDb {
    pub processes: BTreeMap<String, ProcessDataset>,
}

impl ProcessDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, p: ProcessDataset) {
        self.processes.insert(p.process_id.clone(), p);
    }

    pub fn get(&self, id: &str) -> Option<&ProcessDataset> {
        self.processes.get(id)
    }

    pub fn len(&self) -> usize {
        self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }

    /// Checks every dataset, every technosphere reference, and acyclicity.
    pub fn validate(&self) -> Result<(), LcaError> {
        for p in self.processes.values() {
            p.validate()?;
        }
        let roots: Vec<&str> = self.processes.keys().map(String::as_str).collect();
        topological_order(self, &roots).map(|_| ())
    }
}

/// Reachable processes from `roots`, parents before children.
fn topological_order<'a>(db: &'a ProcessDb, roots: &[&'a str]) -> Result<Vec<&'a str>, LcaError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: HashMap<&str, Mark> = HashMap::new();
    let mut postorder: Vec<&str> = Vec::new();

    for &root in roots {
        if marks.contains_key(root) {
            continue;
        }
        let node = db.get(root).ok_or_else(|| LcaError::UnknownProcess(root.to_string()))?;
        // explicit stack of (process, iterator over its inputs) keeps deep chains off the call stack
        let mut stack = vec![(root, node.technosphere_inputs.keys())];
        marks.insert(root, Mark::Open);
        while let Some((id, children)) = stack.last_mut() {
            match children.next() {
                Some(child) => {
                    let child = child.as_str();
                    match marks.get(child) {
                        Some(Mark::Done) => {}
                        Some(Mark::Open) => {
                            let start = stack.iter().position(|(p, _)| *p == child).unwrap_or(0);
                            let mut cycle: Vec<String> = stack[start..].iter().map(|(p, _)| p.to_string()).collect();
                            cycle.push(child.to_string());
                            return Err(LcaError::Cycle(cycle));
                        }
                        None => {
                            let next = db
                                .get(child)
                                .ok_or_else(|| LcaError::UnknownProcess(format!("{child} (input of {id})")))?;
                            marks.insert(child, Mark::Open);
                            stack.push((child, next.technosphere_inputs.keys()));
                        }
                    }
                }
                None => {
                    let id = *id;
                    marks.insert(id, Mark::Done);
                    postorder.push(id);
                    stack.pop();
                }
            }
        }
    }
    postorder.reverse();
    Ok(postorder)
}

/// Expands a demand (process id → amount of its reference output) through the
/// technosphere and sums the biosphere exchanges of every visited process.
pub fn expand_inventory(demand: &BTreeMap<String, f64>, db: &ProcessDb) -> Result<InventoryVector, LcaError> {
    for (id, &amount) in demand {
        if db.get(id).is_none() {
            return Err(LcaError::UnknownProcess(id.clone()));
        }
        if !amount.is_finite() {
            return Err(LcaError::InvalidInventory(format!("non-finite demand for `{id}`")));
        }
    }
    let roots: Vec<&str> = demand.keys().map(String::as_str).collect();
    let order = topological_order(db, &roots)?;

    let mut activity: HashMap<&str, f64> = demand.iter().map(|(k, &v)| (k.as_str(), v)).collect();
    let mut inventory = InventoryVector::new();
    for id in order {
        let level = activity.get(id).copied().unwrap_or(0.0);
        if level == 0.0 {
            continue;
        }
        let process = &db.processes[id];
        let scale = level / process.functional_unit;
        for (child, &q) in &process.technosphere_inputs {
            *activity.entry(child.as_str()).or_insert(0.0) += scale * q;
        }
        for (flow, &q) in &process.biosphere_exchanges {
            inventory.add(flow.clone(), scale * q);
        }
    }
    Ok(inventory)
}
