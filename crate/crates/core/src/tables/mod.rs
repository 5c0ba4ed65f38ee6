//! Supply, use and demand tables plus the entity registry.
//!
//! Tables are stored as ordered sparse maps so that every derived quantity
//! is summed in a fixed order and calibration is bit-reproducible.

mod balancing;
mod io;
mod registry;
mod synthetic;
pub mod toy;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use balancing::{compute_balancing, BalancingTerms};
pub use io::{load_tables, write_tables, TablePaths};
pub use registry::{Entity, EntityKind, Registry, RegistryData, DEFAULT_PURPOSES};
pub use synthetic::{generate_synthetic_world, SyntheticSpec};

use crate::error::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(i as u32)
            }
        }
    };
}

id_type!(
    /// Position of a country in the registry.
    CountryId
);
id_type!(
    /// Position of a product in the registry.
    ProductId
);
id_type!(
    /// Position of a production process type in the registry.
    ProcessId
);
id_type!(
    /// Position of a demand purpose in the registry.
    PurposeId
);

/// Supply table key: process `process` in `country` supplies `product`
/// in the same country.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupplyKey {
    pub country: CountryId,
    pub process: ProcessId,
    pub product: ProductId,
}

/// Use table key: `product` originating in `origin` is consumed by
/// `process` in `user`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UseKey {
    pub origin: CountryId,
    pub product: ProductId,
    pub user: CountryId,
    pub process: ProcessId,
}

/// Demand table key: `product` originating in `origin` serves `purpose`
/// in `destination`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DemandKey {
    pub origin: CountryId,
    pub product: ProductId,
    pub destination: CountryId,
    pub purpose: PurposeId,
}

pub type SupplyTable = BTreeMap<SupplyKey, f64>;
pub type UseTable = BTreeMap<UseKey, f64>;
pub type DemandTable = BTreeMap<DemandKey, f64>;

/// Positive part of a demand entry.
#[inline]
pub fn positive_part(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Negative part of a demand entry. `positive_part(v) + negative_part(v) == v`.
#[inline]
pub fn negative_part(v: f64) -> f64 {
    if v < 0.0 {
        v
    } else {
        0.0
    }
}

/// Validated tables and the registry they refer to. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyUseTables {
    registry: Registry,
    supply: SupplyTable,
    uses: UseTable,
    demand: DemandTable,
}

impl SupplyUseTables {
    /// Builds tables from in-memory parts, enforcing the same rules as
    /// [`load_tables`].
    pub fn new(
        registry: Registry,
        supply: SupplyTable,
        uses: UseTable,
        demand: DemandTable,
    ) -> Result<Self> {
        let tables = SupplyUseTables {
            registry,
            supply,
            uses,
            demand,
        };
        tables.validate()?;
        Ok(tables)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn supply(&self) -> &SupplyTable {
        &self.supply
    }

    pub fn uses(&self) -> &UseTable {
        &self.uses
    }

    pub fn demand(&self) -> &DemandTable {
        &self.demand
    }

    /// Iterates the positive part of the demand table, skipping zero cells.
    pub fn demand_positive(&self) -> impl Iterator<Item = (&DemandKey, f64)> {
        self.demand
            .iter()
            .map(|(k, &v)| (k, positive_part(v)))
            .filter(|&(_, v)| v != 0.0)
    }

    /// Iterates the negative part of the demand table, skipping zero cells.
    pub fn demand_negative(&self) -> impl Iterator<Item = (&DemandKey, f64)> {
        self.demand
            .iter()
            .map(|(k, &v)| (k, negative_part(v)))
            .filter(|&(_, v)| v != 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let reg = &self.registry;
        let (nc, np, nk, nv) = (
            reg.countries().len() as u32,
            reg.products().len() as u32,
            reg.processes().len() as u32,
            reg.purposes().len() as u32,
        );
        let bad = |what: &str| Error::Invalid(what.to_owned());
        for (key, &v) in &self.supply {
            if key.country.0 >= nc || key.process.0 >= nk || key.product.0 >= np {
                return Err(bad("supply entry references an unknown entity"));
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!(
                    "supply amounts must be finite and non-negative, got {v}"
                )));
            }
        }
        for (key, &v) in &self.uses {
            if key.origin.0 >= nc || key.user.0 >= nc || key.product.0 >= np || key.process.0 >= nk
            {
                return Err(bad("use entry references an unknown entity"));
            }
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!(
                    "use amounts must be finite and non-negative, got {v}"
                )));
            }
        }
        for (key, &v) in &self.demand {
            if key.origin.0 >= nc
                || key.destination.0 >= nc
                || key.product.0 >= np
                || key.purpose.0 >= nv
            {
                return Err(bad("demand entry references an unknown entity"));
            }
            if !v.is_finite() {
                return Err(Error::Invalid(format!("demand amounts must be finite, got {v}")));
            }
            if v < 0.0 && !reg.purpose_allows_negative(key.purpose) {
                return Err(Error::Invalid(format!(
                    "negative demand {v} for purpose '{}': only balancing and stock_addition may be negative",
                    reg.purposes()[key.purpose.index()].code
                )));
            }
        }
        Ok(())
    }
}
