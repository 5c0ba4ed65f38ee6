use foodnet_core::analysis::{layer_metrics, LayerMetrics, SweepReader, DEFAULT_LINK_THRESHOLD};
use foodnet_core::{CalibratedModel, Engine, Error};

/// Request limits enforced before any computation starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_targets: usize,
    pub max_horizon: usize,
    /// Largest number of scenarios a single request may run when no
    /// precomputed sweep covers it.
    pub max_scenarios: usize,
    pub max_page: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_targets: 1000,
            max_horizon: 100,
            max_scenarios: 5000,
            max_page: 1000,
        }
    }
}

/// Everything a request may read. Immutable once built.
#[derive(Debug)]
pub struct Session {
    pub model: CalibratedModel,
    pub engine: Engine,
    pub sweep: Option<SweepReader>,
    pub limits: Limits,
    pub metrics: Vec<LayerMetrics>,
    pub metrics_threshold: f64,
}

impl Session {
    /// Fails if the sweep was computed from a different model.
    pub fn new(model: CalibratedModel, sweep: Option<SweepReader>, limits: Limits) -> Result<Self, Error> {
        let engine = Engine::new(&model);
        if let Some(s) = &sweep {
            if s.manifest().model_hash != engine.fingerprint() || s.manifest().horizon != engine.horizon() {
                return Err(Error::ModelMismatch("the sweep was computed from a different model".into()));
            }
        }
        let metrics = layer_metrics(&model, DEFAULT_LINK_THRESHOLD);
        Ok(Session {
            model,
            engine,
            sweep,
            limits,
            metrics,
            metrics_threshold: DEFAULT_LINK_THRESHOLD,
        })
    }

    /// The sweep, if it is complete.
    pub fn complete_sweep(&self) -> Option<&SweepReader> {
        self.sweep.as_ref().filter(|s| s.is_complete())
    }
}
