use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tables::{CountryId, ProcessId, ProductId, SupplyUseTables};

/// Fraction of a cell's production-input pool assigned to one process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub process: ProcessId,
    pub fraction: f64,
}

/// Input splits per (country, product) cell, sorted by process. Cells not
/// used by any process have no entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputSplits {
    pub by_cell: Vec<Vec<Split>>,
}

impl InputSplits {
    pub fn fraction(&self, cell: usize, process: ProcessId) -> f64 {
        self.by_cell[cell]
            .iter()
            .find(|s| s.process == process)
            .map_or(0.0, |s| s.fraction)
    }
}

pub fn derive_input_splits(tables: &SupplyUseTables) -> InputSplits {
    let reg = tables.registry();
    let mut per_process: BTreeMap<(usize, ProcessId), f64> = BTreeMap::new();
    for (k, &v) in tables.uses() {
        if v > 0.0 {
            *per_process
                .entry((reg.cell(k.user, k.product), k.process))
                .or_insert(0.0) += v;
        }
    }
    let mut totals = vec![0.0; reg.n_cells()];
    for (&(cell, _), &v) in &per_process {
        totals[cell] += v;
    }
    let mut by_cell = vec![Vec::new(); reg.n_cells()];
    for ((cell, process), v) in per_process {
        by_cell[cell].push(Split {
            process,
            fraction: v / totals[cell],
        });
    }
    InputSplits { by_cell }
}

/// A coefficient attached to one output product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub product: ProductId,
    pub value: f64,
}

/// Linear production function of one process in one country.
///
/// A process with inputs converts its pooled inputs with `alpha` per output;
/// an input-free process supplies the constant `beta` every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub country: CountryId,
    pub process: ProcessId,
    pub inputs: Vec<ProductId>,
    pub outputs: Vec<ProductId>,
    pub alpha: Vec<Coefficient>,
    pub beta: Vec<Coefficient>,
}

impl ProcessSpec {
    pub fn alpha(&self, product: ProductId) -> f64 {
        self.alpha
            .iter()
            .find(|c| c.product == product)
            .map_or(0.0, |c| c.value)
    }

    pub fn beta(&self, product: ProductId) -> f64 {
        self.beta
            .iter()
            .find(|c| c.product == product)
            .map_or(0.0, |c| c.value)
    }

    pub fn is_source(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Derives input and output sets and production coefficients for every
/// (country, process) pair that supplies or uses anything. Pairs with
/// neither are inert and omitted.
pub fn derive_process_specs(tables: &SupplyUseTables) -> Vec<ProcessSpec> {
    let mut outputs: BTreeMap<(CountryId, ProcessId), Vec<(ProductId, f64)>> = BTreeMap::new();
    for (k, &v) in tables.supply() {
        if v > 0.0 {
            outputs
                .entry((k.country, k.process))
                .or_default()
                .push((k.product, v));
        }
    }
    let mut inputs: BTreeMap<(CountryId, ProcessId), BTreeMap<ProductId, f64>> = BTreeMap::new();
    for (k, &v) in tables.uses() {
        if v > 0.0 {
            *inputs
                .entry((k.user, k.process))
                .or_default()
                .entry(k.product)
                .or_insert(0.0) += v;
        }
    }
    let mut keys: Vec<(CountryId, ProcessId)> = outputs.keys().chain(inputs.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();

    keys.into_iter()
        .map(|key| {
            let outs = outputs.remove(&key).unwrap_or_default();
            let ins = inputs.remove(&key).unwrap_or_default();
            let total_input: f64 = ins.values().sum();
            let mut spec = ProcessSpec {
                country: key.0,
                process: key.1,
                inputs: ins.keys().copied().collect(),
                outputs: outs.iter().map(|&(p, _)| p).collect(),
                alpha: Vec::new(),
                beta: Vec::new(),
            };
            if spec.inputs.is_empty() {
                spec.beta = outs
                    .iter()
                    .map(|&(product, value)| Coefficient { product, value })
                    .collect();
            } else {
                assert!(
                    total_input > 0.0,
                    "a process with inputs must have positive total input"
                );
                spec.alpha = outs
                    .iter()
                    .map(|&(product, s)| Coefficient {
                        product,
                        value: s / total_input,
                    })
                    .collect();
            }
            spec
        })
        .collect()
}
