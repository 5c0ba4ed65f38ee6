//! Derivation of every model parameter from the tables.

mod diagnostics;
mod initial;
mod process;
mod shares;
mod trade;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use diagnostics::{write_diagnostics, Diagnostic, DiagnosticKind};
pub use initial::derive_initial_state;
pub use process::{derive_input_splits, derive_process_specs, Coefficient, InputSplits, ProcessSpec, Split};
pub use shares::{derive_allocation_shares, AllocationShares, CLOSURE_TOLERANCE};
pub use trade::{derive_trade_layers, TradeLayer, TradeLink};

use crate::error::{Error, Result};
use crate::tables::{compute_balancing, CountryId, ProductId, Registry, SupplyUseTables};

pub const DEFAULT_HORIZON: usize = 10;
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// How allocation-share denominators are formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// Common denominator: the sum of the four numerators.
    #[default]
    Unified,
    /// Separate denominator for each share; shares need not sum to one.
    Verbatim,
}

impl std::str::FromStr for CalibrationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unified" => Ok(CalibrationMode::Unified),
            "verbatim" => Ok(CalibrationMode::Verbatim),
            other => Err(Error::Invalid(format!(
                "calibration mode must be 'unified' or 'verbatim', got '{other}'"
            ))),
        }
    }
}

/// Every parameter the dynamics need. Immutable and cheap to share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub format_version: u32,
    pub registry: Registry,
    pub mode: CalibrationMode,
    pub horizon: usize,
    pub trade_layers: Vec<TradeLayer>,
    pub shares: AllocationShares,
    pub input_splits: InputSplits,
    pub processes: Vec<ProcessSpec>,
    pub initial_amounts: Vec<f64>,
    pub initial_correction: Vec<f64>,
}

/// A calibrated model together with the degenerate entities found on the way.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub model: CalibratedModel,
    pub diagnostics: Vec<Diagnostic>,
}

/// Calibrates the model from validated tables.
pub fn calibrate(tables: &SupplyUseTables, mode: CalibrationMode, horizon: usize) -> Calibration {
    let reg = tables.registry();
    let balancing = compute_balancing(tables);
    let trade_layers = derive_trade_layers(tables);
    let terms = shares::share_terms(tables, &balancing);
    let shares = shares::shares_from_terms(&terms, mode);
    let input_splits = derive_input_splits(tables);
    let processes = derive_process_specs(tables);
    let (initial_amounts, initial_correction) = derive_initial_state(tables, &balancing);

    let mut diagnostics = Vec::new();

    // cells that can receive an amount: produced domestically, imported, or
    // seeded by the initial state or correction
    let mut receives = vec![false; reg.n_cells()];
    for p in &processes {
        for &i in &p.outputs {
            receives[reg.cell(p.country, i)] = true;
        }
    }
    for layer in &trade_layers {
        for l in &layer.links {
            receives[reg.cell(l.importer, layer.product)] = true;
        }
    }
    for cell in 0..reg.n_cells() {
        if initial_amounts[cell] > 0.0 || initial_correction[cell] > 0.0 {
            receives[cell] = true;
        }
        if receives[cell] && shares.is_degenerate(cell) {
            let (c, i) = reg.cell_parts(cell);
            diagnostics.push(Diagnostic::cell(
                DiagnosticKind::ZeroAllocationDenominator,
                reg,
                c,
                i,
                0.0,
                "cell can hold an amount but has no recorded use; it will be stranded",
            ));
        }
    }

    if mode == CalibrationMode::Verbatim {
        for cell in shares::defined_cells(&terms) {
            let deviation = shares.sum(cell) - 1.0;
            if deviation.abs() > CLOSURE_TOLERANCE {
                let (c, i) = reg.cell_parts(cell);
                diagnostics.push(Diagnostic::cell(
                    DiagnosticKind::ShareClosureDeviation,
                    reg,
                    c,
                    i,
                    deviation,
                    "sum of allocation shares minus one",
                ));
            }
        }
    }

    for layer in &trade_layers {
        let sums = layer.column_sums();
        for d in 0..reg.n_countries() {
            let d = CountryId::from(d);
            let cell = reg.cell(d, layer.product);
            if shares.exp[cell] > 0.0 && !sums.contains_key(&d) {
                diagnostics.push(Diagnostic::cell(
                    DiagnosticKind::ZeroTradeColumn,
                    reg,
                    d,
                    layer.product,
                    shares.exp[cell],
                    "export share without recorded foreign buyers; exports are dropped",
                ));
            }
        }
    }

    Calibration {
        model: CalibratedModel {
            format_version: MODEL_FORMAT_VERSION,
            registry: reg.clone(),
            mode,
            horizon,
            trade_layers,
            shares,
            input_splits,
            processes,
            initial_amounts,
            initial_correction,
        },
        diagnostics,
    }
}

impl CalibratedModel {
    pub fn n_cells(&self) -> usize {
        self.registry.n_cells()
    }

    pub fn cell(&self, country: CountryId, product: ProductId) -> usize {
        self.registry.cell(country, product)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("model serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialises")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: CalibratedModel = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        model.check_shape()?;
        Ok(model)
    }

    /// Structural checks on a model obtained from outside this crate.
    pub fn check_shape(&self) -> Result<()> {
        let n = self.n_cells();
        let nc = self.registry.n_countries() as u32;
        let np = self.registry.n_products() as u32;
        let nk = self.registry.n_processes() as u32;
        let bad = |m: &str| Err(Error::Invalid(format!("malformed model: {m}")));
        if self.format_version != MODEL_FORMAT_VERSION {
            return bad("unsupported format_version");
        }
        if self.shares.prod.len() != n
            || self.shares.exp.len() != n
            || self.shares.food.len() != n
            || self.shares.other.len() != n
            || self.input_splits.by_cell.len() != n
            || self.initial_amounts.len() != n
            || self.initial_correction.len() != n
        {
            return bad("per-cell arrays do not match the registry");
        }
        if self.trade_layers.len() != np as usize
            || self
                .trade_layers
                .iter()
                .enumerate()
                .any(|(i, l)| l.product.index() != i)
        {
            return bad("one trade layer per product is required, in product order");
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        for l in &self.trade_layers {
            for t in &l.links {
                if t.importer.0 >= nc || t.exporter.0 >= nc || t.importer == t.exporter {
                    return bad("trade link with invalid endpoints");
                }
                if !nonneg(t.share) {
                    return bad("negative trade share");
                }
            }
        }
        for p in &self.processes {
            if p.country.0 >= nc || p.process.0 >= nk {
                return bad("process spec references unknown entity");
            }
            let products = p.inputs.iter().chain(&p.outputs);
            let coeffs = p.alpha.iter().chain(&p.beta);
            if products.clone().any(|i| i.0 >= np) || coeffs.clone().any(|c| c.product.0 >= np) {
                return bad("process spec references unknown product");
            }
            if coeffs.clone().any(|c| !nonneg(c.value)) {
                return bad("negative production coefficient");
            }
            if !p.alpha.is_empty() && !p.beta.is_empty() {
                return bad("process has both alpha and beta coefficients");
            }
        }
        for splits in &self.input_splits.by_cell {
            if splits.iter().any(|s| s.process.0 >= nk || !nonneg(s.fraction)) {
                return bad("invalid input split");
            }
        }
        let arrays = [
            &self.shares.prod,
            &self.shares.exp,
            &self.shares.food,
            &self.shares.other,
            &self.initial_amounts,
            &self.initial_correction,
        ];
        if arrays.iter().any(|a| a.iter().any(|&v| !nonneg(v))) {
            return bad("negative share or initial amount");
        }
        Ok(())
    }
}
