use serde::{Deserialize, Serialize};

use super::CalibrationMode;
use crate::tables::{BalancingTerms, SupplyUseTables};

/// Tolerance on the four-way share closure.
pub const CLOSURE_TOLERANCE: f64 = 1e-12;

/// Fixed allocation fractions per (country, product) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationShares {
    pub prod: Vec<f64>,
    pub exp: Vec<f64>,
    pub food: Vec<f64>,
    #[serde(rename = "else")]
    pub other: Vec<f64>,
}

impl AllocationShares {
    pub fn zeros(n: usize) -> Self {
        AllocationShares {
            prod: vec![0.0; n],
            exp: vec![0.0; n],
            food: vec![0.0; n],
            other: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.prod.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prod.is_empty()
    }

    pub fn sum(&self, cell: usize) -> f64 {
        self.prod[cell] + self.food[cell] + self.exp[cell] + self.other[cell]
    }

    pub fn is_degenerate(&self, cell: usize) -> bool {
        self.prod[cell] == 0.0
            && self.exp[cell] == 0.0
            && self.food[cell] == 0.0
            && self.other[cell] == 0.0
    }
}

/// Numerators of the four shares per cell, plus the alternative
/// denominators used by the verbatim mode.
#[derive(Debug, Clone)]
pub(crate) struct ShareTerms {
    /// Inputs used by the cell's country's processes, any origin.
    pub prod: Vec<f64>,
    /// Food demand met in the country, any origin.
    pub food: Vec<f64>,
    /// The cell's output used abroad.
    pub exp: Vec<f64>,
    /// Non-food positive demand in the country plus the positive balancing.
    pub other: Vec<f64>,
    /// All positive demand met in the country, any origin and purpose.
    pub demand_in: Vec<f64>,
    /// All uses and positive demand of the cell's output, anywhere.
    pub origin_total: Vec<f64>,
    pub balancing_pos: Vec<f64>,
}

pub(crate) fn share_terms(tables: &SupplyUseTables, balancing: &BalancingTerms) -> ShareTerms {
    let reg = tables.registry();
    let n = reg.n_cells();
    let food_purpose = reg.food_purpose();
    let mut t = ShareTerms {
        prod: vec![0.0; n],
        food: vec![0.0; n],
        exp: vec![0.0; n],
        other: vec![0.0; n],
        demand_in: vec![0.0; n],
        origin_total: vec![0.0; n],
        balancing_pos: (0..n).map(|c| balancing.positive(c)).collect(),
    };
    for (k, &v) in tables.uses() {
        t.prod[reg.cell(k.user, k.product)] += v;
        let origin = reg.cell(k.origin, k.product);
        t.origin_total[origin] += v;
        if k.origin != k.user {
            t.exp[origin] += v;
        }
    }
    for (k, v) in tables.demand_positive() {
        let dest = reg.cell(k.destination, k.product);
        let origin = reg.cell(k.origin, k.product);
        if k.purpose == food_purpose {
            t.food[dest] += v;
        } else {
            t.other[dest] += v;
        }
        t.demand_in[dest] += v;
        t.origin_total[origin] += v;
        if k.origin != k.destination {
            t.exp[origin] += v;
        }
    }
    for (c, b) in t.balancing_pos.iter().enumerate() {
        t.other[c] += b;
    }
    t
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Cells whose shares are defined (some denominator is nonzero).
pub(crate) fn defined_cells(terms: &ShareTerms) -> impl Iterator<Item = usize> + '_ {
    (0..terms.prod.len()).filter(|&c| {
        terms.prod[c] + terms.food[c] + terms.exp[c] + terms.other[c] > 0.0
            || terms.origin_total[c] + terms.balancing_pos[c] > 0.0
    })
}

pub(crate) fn shares_from_terms(terms: &ShareTerms, mode: CalibrationMode) -> AllocationShares {
    let n = terms.prod.len();
    let mut s = AllocationShares::zeros(n);
    for c in 0..n {
        match mode {
            CalibrationMode::Unified => {
                let den = terms.prod[c] + terms.food[c] + terms.exp[c] + terms.other[c];
                s.prod[c] = ratio(terms.prod[c], den);
                s.food[c] = ratio(terms.food[c], den);
                s.exp[c] = ratio(terms.exp[c], den);
                s.other[c] = ratio(terms.other[c], den);
            }
            CalibrationMode::Verbatim => {
                let prod_den = terms.prod[c] + terms.demand_in[c] + terms.balancing_pos[c];
                let den = terms.origin_total[c] + terms.balancing_pos[c];
                s.prod[c] = ratio(terms.prod[c], prod_den);
                s.food[c] = ratio(terms.food[c], den);
                s.exp[c] = ratio(terms.exp[c], den);
                s.other[c] = ratio(terms.other[c], den);
            }
        }
    }
    s
}

/// Derives the allocation shares.
///
/// In [`CalibrationMode::Unified`] every share is divided by the sum of the
/// four numerators so the shares close to one. [`CalibrationMode::Verbatim`]
/// keeps the separate per-share denominators (destination-indexed for the
/// production share, origin-indexed for the rest); closure then generally
/// fails and is reported by calibration diagnostics.
pub fn derive_allocation_shares(
    tables: &SupplyUseTables,
    balancing: &BalancingTerms,
    mode: CalibrationMode,
) -> AllocationShares {
    shares_from_terms(&share_terms(tables, balancing), mode)
}
