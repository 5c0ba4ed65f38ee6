use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tables::{CountryId, ProductId, SupplyUseTables};

/// One directed link of a trade layer: `share` of the exporter's foreign
/// off-take goes to the importer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeLink {
    pub importer: CountryId,
    pub exporter: CountryId,
    pub share: f64,
}

/// Column-stochastic export-share matrix of one product, stored as
/// triplets sorted by (exporter, importer). Absent entries are zero and the
/// diagonal is always absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeLayer {
    pub product: ProductId,
    pub links: Vec<TradeLink>,
}

impl TradeLayer {
    pub fn share(&self, importer: CountryId, exporter: CountryId) -> f64 {
        self.links
            .binary_search_by(|l| (l.exporter, l.importer).cmp(&(exporter, importer)))
            .map(|i| self.links[i].share)
            .unwrap_or(0.0)
    }

    /// Sum of each exporter's column; exporters without links are absent.
    pub fn column_sums(&self) -> BTreeMap<CountryId, f64> {
        let mut sums = BTreeMap::new();
        for l in &self.links {
            *sums.entry(l.exporter).or_insert(0.0) += l.share;
        }
        sums
    }
}

/// Foreign off-take of every (product, exporter, importer) triple: uses by
/// the importer's processes plus positive demand in the importer.
pub(crate) fn foreign_offtake(tables: &SupplyUseTables) -> BTreeMap<(ProductId, CountryId, CountryId), f64> {
    let mut flows = BTreeMap::new();
    for (k, &v) in tables.uses() {
        if k.origin != k.user && v != 0.0 {
            *flows.entry((k.product, k.origin, k.user)).or_insert(0.0) += v;
        }
    }
    for (k, v) in tables.demand_positive() {
        if k.origin != k.destination {
            *flows.entry((k.product, k.origin, k.destination)).or_insert(0.0) += v;
        }
    }
    flows
}

/// Builds one trade layer per product. Exporters without foreign off-take
/// get an all-zero column.
pub fn derive_trade_layers(tables: &SupplyUseTables) -> Vec<TradeLayer> {
    let n_products = tables.registry().n_products();
    let flows = foreign_offtake(tables);
    let mut totals: BTreeMap<(ProductId, CountryId), f64> = BTreeMap::new();
    for (&(i, d, _), &v) in &flows {
        *totals.entry((i, d)).or_insert(0.0) += v;
    }
    let mut layers: Vec<TradeLayer> = (0..n_products)
        .map(|i| TradeLayer {
            product: ProductId::from(i),
            links: Vec::new(),
        })
        .collect();
    for (&(i, d, c), &v) in &flows {
        let total = totals[&(i, d)];
        if total > 0.0 && v > 0.0 {
            layers[i.index()].links.push(TradeLink {
                importer: c,
                exporter: d,
                share: v / total,
            });
        }
    }
    layers
}
