use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::loss::write_with;
use crate::calibration::{Diagnostic, DiagnosticKind};
use crate::engine::{Engine, ShockSpec, TrajectoryMode};
use crate::error::Result;
use crate::format;

/// How much of each cell's first-step availability is domestic output and
/// how much is imported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReexportShares {
    pub model_hash: String,
    /// `o / (o + h)` per cell, 0 where nothing is available.
    pub domestic: Vec<f64>,
    /// `h / (o + h)` per cell, 0 where nothing is available.
    pub imported: Vec<f64>,
    /// Cells with `o + h = 0`.
    pub diagnostics: Vec<Diagnostic>,
}

/// Shares of the first iteration of the unshocked run, where imports are
/// the exports reserved from the calibrated initial amounts.
pub fn reexport_shares(engine: &Engine) -> ReexportShares {
    let reg = engine.registry();
    let traj = engine
        .run(&ShockSpec::baseline().with_horizon(0), TrajectoryMode::Full)
        .expect("baseline has no targets to validate");
    let first = traj.state(0).expect("full trajectory has step 0");
    let n = engine.n_cells();
    let mut domestic = vec![0.0; n];
    let mut imported = vec![0.0; n];
    let mut diagnostics = Vec::new();
    for cell in 0..n {
        let (o, h) = (first.o[cell], first.h[cell]);
        let total = o + h;
        if total > 0.0 {
            domestic[cell] = o / total;
            imported[cell] = h / total;
        } else {
            let (c, i) = reg.cell_parts(cell);
            diagnostics.push(Diagnostic::cell(
                DiagnosticKind::ZeroBaseline,
                reg,
                c,
                i,
                total,
                "nothing produced or imported in the first step",
            ));
        }
    }
    ReexportShares {
        model_hash: engine.fingerprint().to_owned(),
        domestic,
        imported,
        diagnostics,
    }
}

impl ReexportShares {
    /// `country,product,domestic_share,import_share`
    pub fn write_csv(&self, engine: &Engine, path: impl AsRef<Path>) -> Result<()> {
        let reg = engine.registry();
        write_with(path.as_ref(), |w| {
            writeln!(w, "country,product,domestic_share,import_share")?;
            for cell in 0..self.domestic.len() {
                let (c, i) = reg.cell_parts(cell);
                writeln!(
                    w,
                    "{},{},{},{}",
                    reg.country_code(c),
                    reg.product_code(i),
                    format::sig9(self.domestic[cell]),
                    format::sig9(self.imported[cell])
                )?;
            }
            Ok(())
        })
    }
}
