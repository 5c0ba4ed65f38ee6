use serde::{Deserialize, Serialize};

use super::loss::rl_value;
use super::sweep::{ScenarioRunner, SweepPlan, Target};
use crate::engine::Engine;
use crate::parallel::Parallelism;
use crate::tables::{CountryId, ProductId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureEntry {
    pub shock_country: CountryId,
    pub shock_product: ProductId,
    pub rl: f64,
}

/// RL of one observed cell under every single-target shock of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfile {
    pub model_hash: String,
    pub country: CountryId,
    pub product: ProductId,
    /// Entries in plan order.
    pub entries: Vec<ExposureEntry>,
}

impl ExposureProfile {
    /// Entries by decreasing RL; ties keep plan order.
    pub fn sorted(&self) -> Vec<ExposureEntry> {
        let mut v = self.entries.clone();
        v.sort_by(|a, b| b.rl.total_cmp(&a.rl));
        v
    }

    pub fn get(&self, target: Target) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| (e.shock_country, e.shock_product) == target)
            .map(|e| e.rl)
    }
}

/// Which shocks hurt `(country, product)` most.
pub fn exposure_profile(
    engine: &Engine,
    country: CountryId,
    product: ProductId,
    plan: &SweepPlan,
    par: Parallelism,
) -> ExposureProfile {
    let runner = ScenarioRunner::new(engine);
    let cell = engine.registry().cell(country, product);
    let base = runner.baseline()[cell];
    let entries = par.map_init(&plan.targets, || engine.workspace(), |ws, &target| {
        let shocked = runner.shocked_amounts(ws, target)[cell];
        ExposureEntry {
            shock_country: target.0,
            shock_product: target.1,
            rl: rl_value(base, shocked),
        }
    });
    ExposureProfile {
        model_hash: engine.fingerprint().to_owned(),
        country,
        product,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{calibrate, CalibrationMode};
    use crate::tables::toy::ToyWorld;

    fn engine(w: &ToyWorld) -> Engine {
        Engine::new(&calibrate(&w.build(), CalibrationMode::Unified, 10).model)
    }

    #[test]
    fn imported_fodder_is_a_critical_supplier() {
        // A (C0) grows maize and sells it all to B (C1), which feeds pigs.
        let mut w = ToyWorld::new(2, 2, 2);
        w.supply(0, 0, 0, 40.0);
        w.uses(0, 0, 1, 1, 40.0);
        w.supply(1, 1, 1, 20.0);
        w.demand(1, 1, 1, "food", 20.0);
        let e = engine(&w);
        let plan = SweepPlan::all(e.registry());
        let prof = exposure_profile(&e, CountryId(1), ProductId(1), &plan, Parallelism::Sequential);
        assert!(prof.get((CountryId(0), ProductId(0))).unwrap() > 0.0);
        assert_eq!(prof.sorted()[0].rl, 1.0);
        assert_eq!(prof.get((CountryId(1), ProductId(1))), Some(1.0));
    }

    #[test]
    fn autarkic_country_has_no_foreign_exposure() {
        let mut w = ToyWorld::new(2, 1, 1);
        w.supply(0, 0, 0, 10.0);
        w.demand(0, 0, 0, "food", 10.0);
        w.supply(1, 0, 0, 5.0);
        w.demand(1, 0, 1, "food", 5.0);
        let e = engine(&w);
        let plan = SweepPlan::new(e.registry(), Some(&[CountryId(1)]), None);
        let prof = exposure_profile(&e, CountryId(0), ProductId(0), &plan, Parallelism::Sequential);
        assert!(prof.entries.iter().all(|x| x.rl == 0.0));
    }
}
