use serde::{Deserialize, Serialize};

use super::loss::{regional_losses, rl_value};
use super::sweep::ScenarioRunner;
use crate::engine::Engine;
use crate::parallel::Parallelism;
use crate::tables::{CountryId, ProductId};

/// Cross-layer and within-layer loss of one observed product.
///
/// `cross` is the RL of product `i` when the input product `j` is shocked;
/// `within` is the RL of `i` when `i` itself is shocked in the same country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPair {
    pub product: ProductId,
    pub cross: f64,
    pub within: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryPair {
    pub country: CountryId,
    #[serde(flatten)]
    pub pair: LayerPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPair {
    pub region: String,
    #[serde(flatten)]
    pub pair: LayerPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub model_hash: String,
    pub shock_country: CountryId,
    pub input_product: ProductId,
    pub observed: Vec<ProductId>,
    /// Country-major, observed products in the given order.
    pub countries: Vec<CountryPair>,
    /// Regions in registry order, observed products in the given order.
    pub regions: Vec<RegionPair>,
}

/// Splits the losses caused by shocking `input_product` in `shock_country`
/// into the cross-layer part and the matching within-layer reference.
///
/// The shocked runs for `j` and for every distinct observed product are
/// computed once each, so for `i == j` both values come from the very same
/// run.
pub fn decompose_layer_effects(
    engine: &Engine,
    shock_country: CountryId,
    input_product: ProductId,
    observed: &[ProductId],
    par: Parallelism,
) -> Decomposition {
    let reg = engine.registry();
    let runner = ScenarioRunner::new(engine);
    let mut shocks = vec![input_product];
    for &i in observed {
        if !shocks.contains(&i) {
            shocks.push(i);
        }
    }
    let runs: Vec<Vec<f64>> = par.map_init(&shocks, || engine.workspace(), |ws, &j| {
        runner.shocked_amounts(ws, (shock_country, j)).to_vec()
    });
    let run_of = |p: ProductId| &runs[shocks.iter().position(|&s| s == p).expect("shock listed")];
    let base = runner.baseline();
    let cross_run = run_of(input_product);

    let mut countries = Vec::with_capacity(reg.n_countries() * observed.len());
    for c in 0..reg.n_countries() {
        let c = CountryId::from(c);
        for &i in observed {
            let cell = reg.cell(c, i);
            countries.push(CountryPair {
                country: c,
                pair: LayerPair {
                    product: i,
                    cross: rl_value(base[cell], cross_run[cell]),
                    within: rl_value(base[cell], run_of(i)[cell]),
                },
            });
        }
    }

    let regional: Vec<_> = runs.iter().map(|x| regional_losses(reg, base, x)).collect();
    let regional_of = |p: ProductId| &regional[shocks.iter().position(|&s| s == p).expect("shock listed")];
    let np = reg.n_products();
    let mut regions = Vec::new();
    for (r, name) in reg.regions().iter().enumerate() {
        for &i in observed {
            let k = r * np + i.index();
            regions.push(RegionPair {
                region: name.clone(),
                pair: LayerPair {
                    product: i,
                    cross: regional_of(input_product)[k].rl,
                    within: regional_of(i)[k].rl,
                },
            });
        }
    }

    Decomposition {
        model_hash: engine.fingerprint().to_owned(),
        shock_country,
        input_product,
        observed: observed.to_vec(),
        countries,
        regions,
    }
}
