//! Iterated production → trade → allocation dynamics.
//!
//! Step `t = 0` starts from the calibrated initial amounts: their allocation
//! provides the production inputs and export reserves consumed by the first
//! iteration, and the first production additionally receives the initial
//! correction. Steps `0..=horizon` each run the full three-step cycle and
//! shocked targets have their output zeroed in every one of them.

mod shock;
mod trajectory;

pub use shock::ShockSpec;
pub use trajectory::{FlowDiagnostic, FlowLoss, Trajectory, TrajectoryMode, WorldState};

use crate::calibration::CalibratedModel;
use crate::error::Result;
use crate::tables::Registry;

/// Compressed row storage: for row `r`, entries `start[r]..start[r + 1]`.
#[derive(Debug, Clone, Default)]
struct Csr {
    start: Vec<u32>,
    index: Vec<u32>,
    weight: Vec<f64>,
}

impl Csr {
    fn from_rows(n_rows: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        // stable: preserves insertion order within a row
        entries.sort_by_key(|&(row, _, _)| row);
        let mut start = vec![0u32; n_rows + 1];
        for &(row, _, _) in &entries {
            start[row + 1] += 1;
        }
        for r in 0..n_rows {
            start[r + 1] += start[r];
        }
        Csr {
            start,
            index: entries.iter().map(|&(_, i, _)| i as u32).collect(),
            weight: entries.iter().map(|&(_, _, w)| w).collect(),
        }
    }

    #[inline]
    fn row_dot(&self, row: usize, values: &[f64]) -> f64 {
        let (a, b) = (self.start[row] as usize, self.start[row + 1] as usize);
        let mut acc = 0.0;
        for (&i, &w) in self.index[a..b].iter().zip(&self.weight[a..b]) {
            acc += w * values[i as usize];
        }
        acc
    }

    fn nnz(&self) -> usize {
        self.index.len()
    }
}

/// A calibrated model compiled into sparse arrays for fast iteration.
///
/// The engine is immutable; any number of scenarios may run against one
/// engine from several threads.
#[derive(Debug, Clone)]
pub struct Engine {
    registry: Registry,
    fingerprint: String,
    horizon: usize,
    eta_prod: Vec<f64>,
    eta_exp: Vec<f64>,
    eta_food: Vec<f64>,
    eta_else: Vec<f64>,
    initial: Vec<f64>,
    correction: Vec<f64>,
    /// Constant output of input-free processes per cell.
    beta: Vec<f64>,
    /// Converting process → (input cell, split fraction).
    process_inputs: Csr,
    /// Output cell → (converting process, alpha).
    producers: Csr,
    /// Importer cell → (exporter cell, trade share).
    imports: Csr,
    /// Cells whose exports have at least one destination.
    routed: Vec<bool>,
    degenerate: Vec<u32>,
    dropped_exports: Vec<u32>,
}

/// Reusable buffers for one running scenario.
#[derive(Debug, Clone)]
pub struct Workspace {
    prev_p: Vec<f64>,
    prev_e: Vec<f64>,
    pooled: Vec<f64>,
    o: Vec<f64>,
    h: Vec<f64>,
    x: Vec<f64>,
}

impl Engine {
    pub fn new(model: &CalibratedModel) -> Self {
        let reg = &model.registry;
        let n = reg.n_cells();
        let mut beta = vec![0.0; n];
        let mut input_entries = Vec::new();
        let mut producer_entries = Vec::new();
        let mut n_converting = 0usize;
        for spec in &model.processes {
            for b in &spec.beta {
                beta[reg.cell(spec.country, b.product)] += b.value;
            }
            if spec.inputs.is_empty() {
                continue;
            }
            let proc_row = n_converting;
            n_converting += 1;
            for &j in &spec.inputs {
                let cell = reg.cell(spec.country, j);
                let fraction = model.input_splits.fraction(cell, spec.process);
                input_entries.push((proc_row, cell, fraction));
            }
            for a in &spec.alpha {
                producer_entries.push((reg.cell(spec.country, a.product), proc_row, a.value));
            }
        }
        let mut import_entries = Vec::new();
        let mut routed = vec![false; n];
        for layer in &model.trade_layers {
            for l in &layer.links {
                let src = reg.cell(l.exporter, layer.product);
                routed[src] = true;
                import_entries.push((reg.cell(l.importer, layer.product), src, l.share));
            }
        }
        let shares = &model.shares;
        let degenerate = (0..n)
            .filter(|&c| shares.is_degenerate(c))
            .map(|c| c as u32)
            .collect();
        let dropped_exports = (0..n)
            .filter(|&c| shares.exp[c] > 0.0 && !routed[c])
            .map(|c| c as u32)
            .collect();
        Engine {
            registry: reg.clone(),
            fingerprint: model.fingerprint(),
            horizon: model.horizon,
            eta_prod: shares.prod.clone(),
            eta_exp: shares.exp.clone(),
            eta_food: shares.food.clone(),
            eta_else: shares.other.clone(),
            initial: model.initial_amounts.clone(),
            correction: model.initial_correction.clone(),
            beta,
            process_inputs: Csr::from_rows(n_converting, input_entries),
            producers: Csr::from_rows(n, producer_entries),
            imports: Csr::from_rows(n, import_entries),
            routed,
            degenerate,
            dropped_exports,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_cells(&self) -> usize {
        self.initial.len()
    }

    /// Whether exports of `cell` reach any importer.
    pub fn routes_exports(&self, cell: usize) -> bool {
        self.routed[cell]
    }

    /// Nonzero count of the production and trade operators, a proxy for
    /// per-step cost.
    pub fn nnz(&self) -> usize {
        self.process_inputs.nnz() + self.producers.nnz() + self.imports.nnz()
    }

    pub fn workspace(&self) -> Workspace {
        let n = self.n_cells();
        Workspace {
            prev_p: vec![0.0; n],
            prev_e: vec![0.0; n],
            pooled: vec![0.0; self.process_inputs.start.len().saturating_sub(1)],
            o: vec![0.0; n],
            h: vec![0.0; n],
            x: vec![0.0; n],
        }
    }

    /// Production inputs and export reserves obtained by allocating the
    /// calibrated initial amounts; these feed step 0.
    pub fn initial_allocation(&self) -> (Vec<f64>, Vec<f64>) {
        let p = self.initial.iter().zip(&self.eta_prod).map(|(x, s)| s * x).collect();
        let e = self.initial.iter().zip(&self.eta_exp).map(|(x, s)| s * x).collect();
        (p, e)
    }

    fn produce_into(&self, prev_p: &[f64], t: usize, shocked: &[usize], pooled: &mut [f64], o: &mut [f64]) {
        for (k, v) in pooled.iter_mut().enumerate() {
            *v = self.process_inputs.row_dot(k, prev_p);
        }
        for (cell, out) in o.iter_mut().enumerate() {
            *out = self.producers.row_dot(cell, pooled) + self.beta[cell];
        }
        if t == 0 {
            for (out, c) in o.iter_mut().zip(&self.correction) {
                *out += c;
            }
        }
        for &cell in shocked {
            o[cell] = 0.0;
        }
    }

    fn import_into(&self, prev_e: &[f64], h: &mut [f64]) {
        for (cell, v) in h.iter_mut().enumerate() {
            *v = self.imports.row_dot(cell, prev_e);
        }
    }

    /// Output of every cell at step `t` from the previous step's production
    /// inputs, with shocked targets zeroed.
    pub fn production_step(&self, prev_inputs: &[f64], shock: &ShockSpec, t: usize) -> Result<Vec<f64>> {
        let shocked = shock.cells(&self.registry)?;
        let mut ws = self.workspace();
        let mut o = vec![0.0; self.n_cells()];
        self.produce_into(prev_inputs, t, &shocked, &mut ws.pooled, &mut o);
        Ok(o)
    }

    /// Imports of every cell from the previous step's export reserves.
    pub fn trade_step(&self, prev_exports: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.n_cells()];
        self.import_into(prev_exports, &mut h);
        h
    }

    /// Splits `produced + imported` by the fixed allocation shares.
    pub fn allocation_step(&self, t: usize, produced: &[f64], imported: &[f64]) -> WorldState {
        let x: Vec<f64> = produced.iter().zip(imported).map(|(o, h)| o + h).collect();
        let part = |eta: &[f64]| x.iter().zip(eta).map(|(x, s)| s * x).collect::<Vec<f64>>();
        WorldState {
            t,
            p: part(&self.eta_prod),
            e: part(&self.eta_exp),
            k: part(&self.eta_food),
            r: part(&self.eta_else),
            o: produced.to_vec(),
            h: imported.to_vec(),
            x,
        }
    }

    /// Runs one scenario for the shock's horizon (or the model's).
    pub fn run(&self, shock: &ShockSpec, mode: TrajectoryMode) -> Result<Trajectory> {
        let shocked = shock.cells(&self.registry)?;
        let horizon = shock.horizon.unwrap_or(self.horizon);
        let mut ws = self.workspace();
        self.seed(&mut ws);
        let mut amounts = Vec::with_capacity(horizon + 1);
        let mut states = (mode == TrajectoryMode::Full).then(|| Vec::with_capacity(horizon + 1));
        let mut flow_diagnostics = Vec::new();
        for t in 0..=horizon {
            for &cell in &self.dropped_exports {
                let amount = ws.prev_e[cell as usize];
                if amount > 0.0 {
                    flow_diagnostics.push(FlowDiagnostic {
                        step: t,
                        cell: cell as usize,
                        kind: FlowLoss::DroppedExport,
                        amount,
                    });
                }
            }
            self.iterate(&mut ws, t, &shocked);
            for &cell in &self.degenerate {
                let amount = ws.x[cell as usize];
                if amount > 0.0 {
                    flow_diagnostics.push(FlowDiagnostic {
                        step: t,
                        cell: cell as usize,
                        kind: FlowLoss::Stranded,
                        amount,
                    });
                }
            }
            amounts.push(ws.x.clone());
            if let Some(states) = states.as_mut() {
                let part = |eta: &[f64]| ws.x.iter().zip(eta).map(|(x, s)| s * x).collect();
                states.push(WorldState {
                    t,
                    x: ws.x.clone(),
                    o: ws.o.clone(),
                    h: ws.h.clone(),
                    p: ws.prev_p.clone(),
                    e: ws.prev_e.clone(),
                    k: part(&self.eta_food),
                    r: part(&self.eta_else),
                });
            }
        }
        Ok(Trajectory {
            model_hash: self.fingerprint.clone(),
            horizon,
            mode,
            amounts,
            states,
            flow_diagnostics,
        })
    }

    /// Baseline run without any shock.
    pub fn baseline(&self, mode: TrajectoryMode) -> Trajectory {
        self.run(&ShockSpec::baseline(), mode)
            .expect("baseline has no targets to validate")
    }

    fn seed(&self, ws: &mut Workspace) {
        for (cell, &x0) in self.initial.iter().enumerate() {
            ws.prev_p[cell] = self.eta_prod[cell] * x0;
            ws.prev_e[cell] = self.eta_exp[cell] * x0;
        }
    }

    /// One full cycle; afterwards `prev_p`/`prev_e` hold this step's
    /// allocation and `x` its available amount.
    #[inline]
    fn iterate(&self, ws: &mut Workspace, t: usize, shocked: &[usize]) {
        self.produce_into(&ws.prev_p, t, shocked, &mut ws.pooled, &mut ws.o);
        self.import_into(&ws.prev_e, &mut ws.h);
        for cell in 0..ws.x.len() {
            let x = ws.o[cell] + ws.h[cell];
            ws.x[cell] = x;
            ws.prev_p[cell] = self.eta_prod[cell] * x;
            ws.prev_e[cell] = self.eta_exp[cell] * x;
        }
    }

    /// Available amounts at the horizon, without recording intermediate
    /// steps. `shocked` must be valid sorted cell indices. Produces exactly
    /// the same values as the last step of [`Engine::run`].
    pub fn final_amounts<'w>(&self, ws: &'w mut Workspace, shocked: &[usize], horizon: usize) -> &'w [f64] {
        self.seed(ws);
        for t in 0..=horizon {
            self.iterate(ws, t, shocked);
        }
        &ws.x
    }
}
