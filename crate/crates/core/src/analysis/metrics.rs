use std::io::Write;
use std::path::Path;

use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use super::loss::write_with;
use crate::calibration::CalibratedModel;
use crate::error::Result;
use crate::format;
use crate::tables::ProductId;

pub const DEFAULT_LINK_THRESHOLD: f64 = 1.0;

/// Structure of one product's trade network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMetrics {
    pub product: ProductId,
    /// Number of nodes (all countries).
    pub n: usize,
    pub n_scc: usize,
    pub n_wcc: usize,
    /// Number of links kept after thresholding.
    pub l: usize,
    pub mean_degree: f64,
    pub mean_strength: f64,
    pub herfindahl: f64,
}

/// Export volume of one link in the first step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedLink {
    pub exporter: usize,
    pub importer: usize,
    pub weight: f64,
}

/// First-step export volumes `T[c,d] * eta_exp[d] * x0[d]` of a layer,
/// keeping links whose volume reaches `threshold`.
pub fn layer_links(model: &CalibratedModel, product: ProductId, threshold: f64) -> Vec<WeightedLink> {
    let Some(layer) = model.trade_layers.iter().find(|l| l.product == product) else {
        return Vec::new();
    };
    layer
        .links
        .iter()
        .filter_map(|link| {
            let src = model.cell(link.exporter, product);
            let weight = link.share * model.shares.exp[src] * model.initial_amounts[src];
            (weight > 0.0 && weight >= threshold).then_some(WeightedLink {
                exporter: link.exporter.index(),
                importer: link.importer.index(),
                weight,
            })
        })
        .collect()
}

/// Concentration of out-strengths; 0 when all strengths are zero.
pub fn herfindahl(strengths: &[f64]) -> f64 {
    let total: f64 = strengths.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    strengths.iter().map(|s| (s / total).powi(2)).sum()
}

/// Size of the largest strongly connected component of a directed graph
/// on `n` nodes (0 for the empty graph).
pub fn largest_scc(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut g = DiGraph::<(), ()>::with_capacity(n, edges.len());
    for _ in 0..n {
        g.add_node(());
    }
    for &(a, b) in edges {
        g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
    }
    petgraph::algo::tarjan_scc(&g).iter().map(Vec::len).max().unwrap_or(0)
}

/// Size of the largest weakly connected component (0 for the empty graph).
pub fn largest_wcc(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut uf = UnionFind::<usize>::new(n);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    let mut sizes = vec![0usize; n];
    for v in 0..n {
        sizes[uf.find(v)] += 1;
    }
    sizes.into_iter().max().unwrap_or(0)
}

/// Metrics of every product layer, in product order.
pub fn layer_metrics(model: &CalibratedModel, threshold: f64) -> Vec<LayerMetrics> {
    let n = model.registry.n_countries();
    (0..model.registry.n_products())
        .map(|i| {
            let product = ProductId::from(i);
            let links = layer_links(model, product, threshold);
            let edges: Vec<(usize, usize)> = links.iter().map(|l| (l.exporter, l.importer)).collect();
            let mut strength = vec![0.0; n];
            for l in &links {
                strength[l.exporter] += l.weight;
            }
            let total: f64 = strength.iter().sum();
            let per_node = |v: f64| if n > 0 { v / n as f64 } else { 0.0 };
            LayerMetrics {
                product,
                n,
                n_scc: largest_scc(n, &edges),
                n_wcc: largest_wcc(n, &edges),
                l: links.len(),
                mean_degree: per_node(links.len() as f64),
                mean_strength: per_node(total),
                herfindahl: herfindahl(&strength),
            }
        })
        .collect()
}

/// `product,N,N_scc,N_wcc,L,mean_degree,mean_strength,herfindahl`
pub fn write_metrics_csv(model: &CalibratedModel, metrics: &[LayerMetrics], path: impl AsRef<Path>) -> Result<()> {
    write_with(path.as_ref(), |w| {
        writeln!(w, "product,N,N_scc,N_wcc,L,mean_degree,mean_strength,herfindahl")?;
        for m in metrics {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                model.registry.product_code(m.product),
                m.n,
                m.n_scc,
                m.n_wcc,
                m.l,
                format::sig9(m.mean_degree),
                format::sig9(m.mean_strength),
                format::sig9(m.herfindahl)
            )?;
        }
        Ok(())
    })
}
