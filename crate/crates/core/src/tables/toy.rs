//! Small hand-built worlds for tests, examples and documentation.

use super::registry::{Entity, RegistryData, DEFAULT_PURPOSES};
use super::{
    CountryId, DemandKey, DemandTable, ProcessId, ProductId, Registry, SupplyKey, SupplyTable,
    SupplyUseTables, UseKey, UseTable,
};
use crate::error::Result;

/// Builder for tiny supply/use/demand tables addressed by position.
///
/// Panics on out-of-range indices or unknown purpose codes; it is meant for
/// tests and examples, not for untrusted input.
#[derive(Debug, Clone)]
pub struct ToyWorld {
    data: RegistryData,
    supply: SupplyTable,
    uses: UseTable,
    demand: DemandTable,
}

impl ToyWorld {
    /// Countries `C0..`, products `P0..`, processes `K0..` and the six
    /// standard purposes. Every country is placed in region `R0`.
    pub fn new(countries: usize, products: usize, processes: usize) -> Self {
        let c: Vec<String> = (0..countries).map(|i| format!("C{i}")).collect();
        let p: Vec<String> = (0..products).map(|i| format!("P{i}")).collect();
        let k: Vec<String> = (0..processes).map(|i| format!("K{i}")).collect();
        Self::with_codes(&c, &p, &k)
    }

    pub fn with_codes<S: AsRef<str>>(countries: &[S], products: &[S], processes: &[S]) -> Self {
        let ent = |list: &[S]| -> Vec<Entity> {
            list.iter()
                .map(|s| Entity::new(s.as_ref(), s.as_ref()))
                .collect()
        };
        let data = RegistryData {
            countries: ent(countries),
            products: ent(products),
            processes: ent(processes),
            purposes: DEFAULT_PURPOSES
                .iter()
                .map(|p| Entity::new(*p, *p))
                .collect(),
            regions: countries
                .iter()
                .map(|c| (c.as_ref().to_owned(), "R0".to_owned()))
                .collect(),
        };
        ToyWorld {
            data,
            supply: SupplyTable::new(),
            uses: UseTable::new(),
            demand: DemandTable::new(),
        }
    }

    pub fn region(&mut self, country: usize, region: &str) -> &mut Self {
        let code = self.data.countries[country].code.clone();
        self.data.regions.insert(code, region.to_owned());
        self
    }

    pub fn supply(&mut self, country: usize, process: usize, product: usize, amount: f64) -> &mut Self {
        assert!(country < self.data.countries.len());
        assert!(process < self.data.processes.len());
        assert!(product < self.data.products.len());
        self.supply.insert(
            SupplyKey {
                country: CountryId::from(country),
                process: ProcessId::from(process),
                product: ProductId::from(product),
            },
            amount,
        );
        self
    }

    pub fn uses(
        &mut self,
        origin: usize,
        product: usize,
        user: usize,
        process: usize,
        amount: f64,
    ) -> &mut Self {
        assert!(origin < self.data.countries.len() && user < self.data.countries.len());
        assert!(process < self.data.processes.len());
        assert!(product < self.data.products.len());
        self.uses.insert(
            UseKey {
                origin: CountryId::from(origin),
                product: ProductId::from(product),
                user: CountryId::from(user),
                process: ProcessId::from(process),
            },
            amount,
        );
        self
    }

    pub fn demand(
        &mut self,
        origin: usize,
        product: usize,
        destination: usize,
        purpose: &str,
        amount: f64,
    ) -> &mut Self {
        let purpose = self
            .data
            .purposes
            .iter()
            .position(|p| p.code == purpose)
            .unwrap_or_else(|| panic!("unknown purpose {purpose}"));
        assert!(origin < self.data.countries.len() && destination < self.data.countries.len());
        self.demand.insert(
            DemandKey {
                origin: CountryId::from(origin),
                product: ProductId::from(product),
                destination: CountryId::from(destination),
                purpose: purpose.into(),
            },
            amount,
        );
        self
    }

    pub fn try_build(&self) -> Result<SupplyUseTables> {
        let registry = Registry::new(self.data.clone())?;
        SupplyUseTables::new(
            registry,
            self.supply.clone(),
            self.uses.clone(),
            self.demand.clone(),
        )
    }

    pub fn build(&self) -> SupplyUseTables {
        self.try_build().expect("toy world is valid")
    }
}
