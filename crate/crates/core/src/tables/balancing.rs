use serde::{Deserialize, Serialize};

use super::SupplyUseTables;

/// Per-cell residual of domestic supply minus all uses and positive demand
/// of the cell's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancingTerms {
    values: Vec<f64>,
}

impl BalancingTerms {
    pub fn from_values(values: Vec<f64>) -> Self {
        BalancingTerms { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    #[inline]
    pub fn positive(&self, cell: usize) -> f64 {
        self.values[cell].max(0.0)
    }

    #[inline]
    pub fn negative(&self, cell: usize) -> f64 {
        self.values[cell].min(0.0)
    }
}

/// Computes the balancing term for every (country, product) cell.
pub fn compute_balancing(tables: &SupplyUseTables) -> BalancingTerms {
    let reg = tables.registry();
    let n = reg.n_cells();
    let mut supplied = vec![0.0; n];
    let mut used = vec![0.0; n];
    let mut demanded = vec![0.0; n];
    for (k, &v) in tables.supply() {
        supplied[reg.cell(k.country, k.product)] += v;
    }
    for (k, &v) in tables.uses() {
        used[reg.cell(k.origin, k.product)] += v;
    }
    for (k, v) in tables.demand_positive() {
        demanded[reg.cell(k.origin, k.product)] += v;
    }
    let values = (0..n)
        .map(|c| supplied[c] - used[c] - demanded[c])
        .collect();
    BalancingTerms { values }
}
