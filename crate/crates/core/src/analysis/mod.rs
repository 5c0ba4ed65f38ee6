//! Loss measures and derived analyses on top of the engine.

mod decompose;
mod exposure;
mod loss;
mod metrics;
mod reexport;
mod sweep;

pub use decompose::{decompose_layer_effects, CountryPair, Decomposition, LayerPair, RegionPair};
pub use exposure::{exposure_profile, ExposureEntry, ExposureProfile};
pub use loss::{regional_losses, relative_loss, rl_value, simulate_loss, LossReport, RegionalLoss};
pub use metrics::{
    herfindahl, largest_scc, largest_wcc, layer_links, layer_metrics, write_metrics_csv, LayerMetrics, WeightedLink,
    DEFAULT_LINK_THRESHOLD,
};
pub use reexport::{reexport_shares, ReexportShares};
pub use sweep::{
    full_sweep, sweep_to_dir, ChunkFormat, ScenarioRunner, ScenarioSlice, SweepManifest, SweepOptions, SweepPlan,
    SweepReader, SweepSummary, SweepTensor, Target,
};
