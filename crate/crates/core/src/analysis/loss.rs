use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Engine, ShockSpec, Trajectory, TrajectoryMode};
use crate::error::{Error, Result};
use crate::format;
use crate::tables::{ProductId, Registry};

/// Relative reduction of availability, `(baseline - shocked) / baseline`.
/// Zero when the baseline is zero.
#[inline]
pub fn rl_value(baseline: f64, shocked: f64) -> f64 {
    if baseline > 0.0 {
        (baseline - shocked) / baseline
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalLoss {
    pub region: String,
    pub product: ProductId,
    pub rl: f64,
}

/// Relative losses of every cell at one step, plus regional aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub model_hash: String,
    pub step: usize,
    pub shock: Option<ShockSpec>,
    /// RL per (country, product) cell.
    pub rl: Vec<f64>,
    /// RL per (region, product), regions in registry order.
    pub regional: Vec<RegionalLoss>,
    /// RL per step `0..=step`, when requested.
    pub series: Option<Vec<Vec<f64>>>,
    /// Cells with zero baseline availability at `step`; their RL is 0.
    pub zero_baseline_cells: usize,
}

/// Regional RL: amounts are summed over each region's countries before the
/// ratio is taken. Countries without a region are left out.
pub fn regional_losses(registry: &Registry, baseline: &[f64], shocked: &[f64]) -> Vec<RegionalLoss> {
    let np = registry.n_products();
    let nr = registry.regions().len();
    let mut base = vec![0.0; nr * np];
    let mut hit = vec![0.0; nr * np];
    for c in 0..registry.n_countries() {
        let Some(r) = registry.region_of(c.into()) else {
            continue;
        };
        for i in 0..np {
            let cell = c * np + i;
            base[r * np + i] += baseline[cell];
            hit[r * np + i] += shocked[cell];
        }
    }
    let mut out = Vec::with_capacity(nr * np);
    for (r, name) in registry.regions().iter().enumerate() {
        for i in 0..np {
            out.push(RegionalLoss {
                region: name.clone(),
                product: ProductId::from(i),
                rl: rl_value(base[r * np + i], hit[r * np + i]),
            });
        }
    }
    out
}

/// Compares a shocked trajectory with the baseline at `step` (default: the
/// horizon). With `with_series` the per-step RL for `0..=step` is included.
pub fn relative_loss(
    registry: &Registry,
    baseline: &Trajectory,
    shocked: &Trajectory,
    step: Option<usize>,
    with_series: bool,
) -> Result<LossReport> {
    if baseline.model_hash != shocked.model_hash {
        return Err(Error::ModelMismatch(
            "baseline and shocked trajectories come from different models".into(),
        ));
    }
    if baseline.horizon != shocked.horizon {
        return Err(Error::ModelMismatch(format!(
            "horizons differ: baseline {} vs shocked {}",
            baseline.horizon, shocked.horizon
        )));
    }
    let step = step.unwrap_or(baseline.horizon);
    if step > baseline.horizon {
        return Err(Error::Invalid(format!(
            "step {step} is beyond the horizon {}",
            baseline.horizon
        )));
    }
    let cell_rl = |t: usize| -> Vec<f64> {
        baseline.amounts[t]
            .iter()
            .zip(&shocked.amounts[t])
            .map(|(&b, &x)| rl_value(b, x))
            .collect()
    };
    let base_x = &baseline.amounts[step];
    Ok(LossReport {
        model_hash: baseline.model_hash.clone(),
        step,
        shock: None,
        rl: cell_rl(step),
        regional: regional_losses(registry, base_x, &shocked.amounts[step]),
        series: with_series.then(|| (0..=step).map(cell_rl).collect()),
        zero_baseline_cells: base_x.iter().filter(|&&b| !(b > 0.0)).count(),
    })
}

/// Runs baseline and shocked scenarios and reports their relative loss at
/// the horizon.
pub fn simulate_loss(engine: &Engine, shock: &ShockSpec, with_series: bool) -> Result<LossReport> {
    let mut baseline_spec = ShockSpec::baseline();
    baseline_spec.horizon = shock.horizon;
    let baseline = engine.run(&baseline_spec, TrajectoryMode::Lean)?;
    let shocked = engine.run(shock, TrajectoryMode::Lean)?;
    let mut report = relative_loss(engine.registry(), &baseline, &shocked, None, with_series)?;
    report.shock = Some(shock.clone());
    Ok(report)
}

impl LossReport {
    /// Writes `country,product,rl` to `cells`, `region,product,rl` to
    /// `regions`, and, when a series is present and a path is given,
    /// `step,country,product,rl`.
    pub fn write_csv(
        &self,
        registry: &Registry,
        cells: impl AsRef<Path>,
        regions: impl AsRef<Path>,
        series: Option<&Path>,
    ) -> Result<()> {
        write_with(cells.as_ref(), |w| {
            writeln!(w, "country,product,rl")?;
            for (cell, v) in self.rl.iter().enumerate() {
                let (c, i) = registry.cell_parts(cell);
                writeln!(
                    w,
                    "{},{},{}",
                    registry.country_code(c),
                    registry.product_code(i),
                    format::sig9(*v)
                )?;
            }
            Ok(())
        })?;
        write_with(regions.as_ref(), |w| {
            writeln!(w, "region,product,rl")?;
            for r in &self.regional {
                writeln!(
                    w,
                    "{},{},{}",
                    r.region,
                    registry.product_code(r.product),
                    format::sig9(r.rl)
                )?;
            }
            Ok(())
        })?;
        if let (Some(path), Some(series)) = (series, &self.series) {
            write_with(path, |w| {
                writeln!(w, "step,country,product,rl")?;
                for (t, rl) in series.iter().enumerate() {
                    for (cell, v) in rl.iter().enumerate() {
                        let (c, i) = registry.cell_parts(cell);
                        writeln!(
                            w,
                            "{t},{},{},{}",
                            registry.country_code(c),
                            registry.product_code(i),
                            format::sig9(*v)
                        )?;
                    }
                }
                Ok(())
            })?;
        }
        Ok(())
    }
}

pub(crate) fn write_with(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
