use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{CountryId, ProductId, Registry};

/// Production targets whose output is destroyed at every step.
///
/// An empty target set is the baseline scenario.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShockSpec {
    targets: BTreeSet<(CountryId, ProductId)>,
    /// Overrides the model horizon when set.
    pub horizon: Option<usize>,
}

impl ShockSpec {
    pub fn baseline() -> Self {
        ShockSpec::default()
    }

    pub fn single(country: CountryId, product: ProductId) -> Self {
        ShockSpec::new([(country, product)])
    }

    pub fn new(targets: impl IntoIterator<Item = (CountryId, ProductId)>) -> Self {
        ShockSpec {
            targets: targets.into_iter().collect(),
            horizon: None,
        }
    }

    /// Every product of `country`.
    pub fn all_products(registry: &Registry, country: CountryId) -> Self {
        ShockSpec::new((0..registry.n_products()).map(|i| (country, ProductId::from(i))))
    }

    /// Resolves `(country, product)` code pairs.
    pub fn from_codes<S: AsRef<str>>(registry: &Registry, pairs: &[(S, S)]) -> Result<Self> {
        pairs
            .iter()
            .map(|(c, p)| registry.resolve_target(c.as_ref(), p.as_ref()))
            .collect::<Result<BTreeSet<_>>>()
            .map(|targets| ShockSpec {
                targets,
                horizon: None,
            })
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn targets(&self) -> &BTreeSet<(CountryId, ProductId)> {
        &self.targets
    }

    pub fn is_baseline(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn is_subset(&self, other: &ShockSpec) -> bool {
        self.targets.is_subset(&other.targets)
    }

    pub fn insert(&mut self, country: CountryId, product: ProductId) {
        self.targets.insert((country, product));
    }

    /// Flat cell indices of the targets, sorted; fails on targets outside
    /// the registry.
    pub fn cells(&self, registry: &Registry) -> Result<Vec<usize>> {
        self.targets
            .iter()
            .map(|&(c, i)| {
                if c.index() >= registry.n_countries() || i.index() >= registry.n_products() {
                    Err(Error::Invalid(format!(
                        "shock target ({}, {}) is outside the registry",
                        c.0, i.0
                    )))
                } else {
                    Ok(registry.cell(c, i))
                }
            })
            .collect()
    }
}
