use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::tables::{CountryId, ProductId, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// All allocation-share numerators are zero for a cell that can hold
    /// an amount.
    ZeroAllocationDenominator,
    /// Verbatim-mode shares do not sum to one.
    ShareClosureDeviation,
    /// A positive export share with no recorded foreign buyer.
    ZeroTradeColumn,
    /// An amount left the system at run time (stranded or dropped).
    StrandedAmount,
    /// Zero baseline availability; relative loss set to zero.
    ZeroBaseline,
}

impl DiagnosticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticKind::ZeroAllocationDenominator => "zero_allocation_denominator",
            DiagnosticKind::ShareClosureDeviation => "share_closure_deviation",
            DiagnosticKind::ZeroTradeColumn => "zero_trade_column",
            DiagnosticKind::StrandedAmount => "stranded_amount",
            DiagnosticKind::ZeroBaseline => "zero_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub country: String,
    pub product: String,
    pub value: f64,
    pub detail: String,
}

impl Diagnostic {
    pub fn cell(
        kind: DiagnosticKind,
        registry: &Registry,
        country: CountryId,
        product: ProductId,
        value: f64,
        detail: impl Into<String>,
    ) -> Self {
        Diagnostic {
            kind,
            country: registry.country_code(country).to_owned(),
            product: registry.product_code(product).to_owned(),
            value,
            detail: detail.into(),
        }
    }
}

/// Writes `kind,country,product,value,detail` rows.
pub fn write_diagnostics(path: impl AsRef<Path>, diagnostics: &[Diagnostic]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "kind,country,product,value,detail")?;
        for d in diagnostics {
            writeln!(
                w,
                "{},{},{},{},\"{}\"",
                d.kind.as_str(),
                d.country,
                d.product,
                format::sig9(d.value),
                d.detail.replace('"', "\"\"")
            )?;
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}
