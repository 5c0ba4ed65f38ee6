use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::tables::Registry;

/// All accounting quantities of one step, per (country, product) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub t: usize,
    /// Total available amount, `o + h`.
    pub x: Vec<f64>,
    /// Produced.
    pub o: Vec<f64>,
    /// Imported.
    pub h: Vec<f64>,
    /// Reserved as production input.
    pub p: Vec<f64>,
    /// Reserved for export.
    pub e: Vec<f64>,
    /// Food.
    pub k: Vec<f64>,
    /// Other uses.
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryMode {
    /// Only the available amount per step.
    #[default]
    Lean,
    /// Every accounting quantity per step.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowLoss {
    /// Available amount in a cell whose allocation shares are all zero.
    Stranded,
    /// Exports of a cell with no recorded foreign buyer.
    DroppedExport,
}

/// An amount that left the accounting at some step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostic {
    pub step: usize,
    pub cell: usize,
    pub kind: FlowLoss,
    pub amount: f64,
}

/// Snapshots of steps `0..=horizon` of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model_hash: String,
    pub horizon: usize,
    pub mode: TrajectoryMode,
    /// Available amount `x` per step, each of length `n_cells`.
    pub amounts: Vec<Vec<f64>>,
    /// Full states per step, present in [`TrajectoryMode::Full`].
    pub states: Option<Vec<WorldState>>,
    pub flow_diagnostics: Vec<FlowDiagnostic>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.amounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amounts.is_empty()
    }

    pub fn amounts_at(&self, step: usize) -> &[f64] {
        &self.amounts[step]
    }

    pub fn final_amounts(&self) -> &[f64] {
        self.amounts.last().expect("trajectory has at least one step")
    }

    pub fn state(&self, step: usize) -> Option<&WorldState> {
        self.states.as_ref().map(|s| &s[step])
    }

    /// Writes `step,country,product,amount` (lean) or
    /// `step,country,product,x,o,h,p,e,k,r` (full). Amounts use the
    /// shortest exact decimal form.
    pub fn write_csv(&self, registry: &Registry, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let n = registry.n_cells();
        (|| -> std::io::Result<()> {
            match &self.states {
                Some(states) => {
                    writeln!(w, "step,country,product,x,o,h,p,e,k,r")?;
                    for s in states {
                        for cell in 0..n {
                            let (c, i) = registry.cell_parts(cell);
                            writeln!(
                                w,
                                "{},{},{},{},{},{},{},{},{},{}",
                                s.t,
                                registry.country_code(c),
                                registry.product_code(i),
                                format::exact(s.x[cell]),
                                format::exact(s.o[cell]),
                                format::exact(s.h[cell]),
                                format::exact(s.p[cell]),
                                format::exact(s.e[cell]),
                                format::exact(s.k[cell]),
                                format::exact(s.r[cell]),
                            )?;
                        }
                    }
                }
                None => {
                    writeln!(w, "step,country,product,amount")?;
                    for (t, x) in self.amounts.iter().enumerate() {
                        for (cell, v) in x.iter().enumerate() {
                            let (c, i) = registry.cell_parts(cell);
                            writeln!(
                                w,
                                "{t},{},{},{}",
                                registry.country_code(c),
                                registry.product_code(i),
                                format::exact(*v)
                            )?;
                        }
                    }
                }
            }
            w.flush()
        })()
        .map_err(|e| Error::io(path, e))
    }
}
