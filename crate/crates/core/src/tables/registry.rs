use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{CountryId, ProcessId, ProductId, PurposeId};
use crate::error::{Error, Result};

/// The six demand purposes of the source tables.
pub const DEFAULT_PURPOSES: [&str; 6] = [
    "food",
    "losses",
    "stock_addition",
    "other",
    "unspecified",
    "balancing",
];

pub const FOOD: &str = "food";
pub const STOCK_ADDITION: &str = "stock_addition";
pub const BALANCING: &str = "balancing";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub code: String,
    pub name: String,
}

impl Entity {
    pub fn new(code: impl Into<String>, name: impl Into<String>) -> Self {
        Entity {
            code: code.into(),
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Country,
    Product,
    Process,
    Purpose,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Country => "country",
            EntityKind::Product => "product",
            EntityKind::Process => "process",
            EntityKind::Purpose => "purpose",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "country" => EntityKind::Country,
            "product" => EntityKind::Product,
            "process" => EntityKind::Process,
            "purpose" => EntityKind::Purpose,
            _ => return None,
        })
    }
}

/// Plain registry contents, the serialised form of [`Registry`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegistryData {
    pub countries: Vec<Entity>,
    pub products: Vec<Entity>,
    pub processes: Vec<Entity>,
    pub purposes: Vec<Entity>,
    /// Country code → region name. Countries may be left unassigned.
    pub regions: BTreeMap<String, String>,
}

/// Ordered entity lists with code lookup.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RegistryData", into = "RegistryData")]
pub struct Registry {
    data: RegistryData,
    country_index: HashMap<String, CountryId>,
    product_index: HashMap<String, ProductId>,
    process_index: HashMap<String, ProcessId>,
    purpose_index: HashMap<String, PurposeId>,
    food: PurposeId,
    stock_addition: Option<PurposeId>,
    balancing: Option<PurposeId>,
    /// Region of each country, `None` when unassigned.
    country_region: Vec<Option<usize>>,
    region_names: Vec<String>,
}

impl PartialEq for Registry {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

fn index<T: From<usize>>(kind: &str, list: &[Entity]) -> Result<HashMap<String, T>> {
    let mut map = HashMap::with_capacity(list.len());
    for (i, e) in list.iter().enumerate() {
        if e.code.is_empty() {
            return Err(Error::Invalid(format!("empty {kind} code")));
        }
        if map.insert(e.code.clone(), T::from(i)).is_some() {
            return Err(Error::Invalid(format!("duplicate {kind} code '{}'", e.code)));
        }
    }
    Ok(map)
}

impl TryFrom<RegistryData> for Registry {
    type Error = Error;

    fn try_from(data: RegistryData) -> Result<Self> {
        Registry::new(data)
    }
}

impl From<Registry> for RegistryData {
    fn from(r: Registry) -> Self {
        r.data
    }
}

impl Registry {
    pub fn new(data: RegistryData) -> Result<Self> {
        let country_index: HashMap<String, CountryId> = index("country", &data.countries)?;
        let product_index = index("product", &data.products)?;
        let process_index = index("process", &data.processes)?;
        let purpose_index: HashMap<String, PurposeId> = index("purpose", &data.purposes)?;
        let food = *purpose_index
            .get(FOOD)
            .ok_or_else(|| Error::Invalid("purposes must include 'food'".into()))?;
        for country in data.regions.keys() {
            if !country_index.contains_key(country) {
                return Err(Error::Invalid(format!(
                    "region assigned to unknown country '{country}'"
                )));
            }
        }
        // regions are ordered by first appearance in country order
        let mut region_names: Vec<String> = Vec::new();
        let country_region = data
            .countries
            .iter()
            .map(|c| {
                data.regions.get(&c.code).map(|r| {
                    match region_names.iter().position(|n| n == r) {
                        Some(p) => p,
                        None => {
                            region_names.push(r.clone());
                            region_names.len() - 1
                        }
                    }
                })
            })
            .collect();
        Ok(Registry {
            stock_addition: purpose_index.get(STOCK_ADDITION).copied(),
            balancing: purpose_index.get(BALANCING).copied(),
            country_index,
            product_index,
            process_index,
            purpose_index,
            food,
            country_region,
            region_names,
            data,
        })
    }

    pub fn data(&self) -> &RegistryData {
        &self.data
    }

    pub fn countries(&self) -> &[Entity] {
        &self.data.countries
    }

    pub fn products(&self) -> &[Entity] {
        &self.data.products
    }

    pub fn processes(&self) -> &[Entity] {
        &self.data.processes
    }

    pub fn purposes(&self) -> &[Entity] {
        &self.data.purposes
    }

    pub fn n_countries(&self) -> usize {
        self.data.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.data.products.len()
    }

    pub fn n_processes(&self) -> usize {
        self.data.processes.len()
    }

    /// Number of (country, product) cells.
    pub fn n_cells(&self) -> usize {
        self.n_countries() * self.n_products()
    }

    /// Flat index of a (country, product) cell, country-major.
    #[inline]
    pub fn cell(&self, country: CountryId, product: ProductId) -> usize {
        country.index() * self.n_products() + product.index()
    }

    #[inline]
    pub fn cell_parts(&self, cell: usize) -> (CountryId, ProductId) {
        let np = self.n_products();
        (CountryId::from(cell / np), ProductId::from(cell % np))
    }

    pub fn country(&self, code: &str) -> Option<CountryId> {
        self.country_index.get(code).copied()
    }

    pub fn product(&self, code: &str) -> Option<ProductId> {
        self.product_index.get(code).copied()
    }

    pub fn process(&self, code: &str) -> Option<ProcessId> {
        self.process_index.get(code).copied()
    }

    pub fn purpose(&self, code: &str) -> Option<PurposeId> {
        self.purpose_index.get(code).copied()
    }

    pub fn country_code(&self, id: CountryId) -> &str {
        &self.data.countries[id.index()].code
    }

    pub fn product_code(&self, id: ProductId) -> &str {
        &self.data.products[id.index()].code
    }

    pub fn process_code(&self, id: ProcessId) -> &str {
        &self.data.processes[id.index()].code
    }

    pub fn food_purpose(&self) -> PurposeId {
        self.food
    }

    pub fn stock_addition_purpose(&self) -> Option<PurposeId> {
        self.stock_addition
    }

    pub fn purpose_allows_negative(&self, purpose: PurposeId) -> bool {
        Some(purpose) == self.stock_addition || Some(purpose) == self.balancing
    }

    /// Region names in order of first appearance along the country list.
    pub fn regions(&self) -> &[String] {
        &self.region_names
    }

    /// Region index of a country, if it has one.
    pub fn region_of(&self, country: CountryId) -> Option<usize> {
        self.country_region[country.index()]
    }

    pub fn region_name_of(&self, country: CountryId) -> Option<&str> {
        self.region_of(country).map(|r| self.region_names[r].as_str())
    }

    /// Resolves a `country:product` pair of codes.
    pub fn resolve_target(&self, country: &str, product: &str) -> Result<(CountryId, ProductId)> {
        let c = self
            .country(country)
            .ok_or_else(|| Error::Invalid(format!("unknown country code '{country}'")))?;
        let p = self
            .product(product)
            .ok_or_else(|| Error::Invalid(format!("unknown product code '{product}'")))?;
        Ok((c, p))
    }
}
