use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::registry::{Entity, RegistryData, DEFAULT_PURPOSES};
use super::{
    CountryId, DemandKey, DemandTable, ProcessId, ProductId, Registry, SupplyKey, SupplyTable,
    SupplyUseTables, UseKey, UseTable,
};

/// Parameters of a generated world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub countries: usize,
    pub products: usize,
    pub processes: usize,
    /// Probability that a converting process uses a given product as input.
    pub density: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(countries: usize, products: usize, processes: usize, density: f64, seed: u64) -> Self {
        SyntheticSpec {
            countries,
            products,
            processes,
            density,
            seed,
        }
    }
}

const MAX_REGIONS: usize = 14;
const ACTIVE_PROBABILITY: f64 = 0.6;

fn country_code(i: usize) -> String {
    let a = (b'A' + (i / 676 % 26) as u8) as char;
    let b = (b'A' + (i / 26 % 26) as u8) as char;
    let c = (b'A' + (i % 26) as u8) as char;
    if i < 26 * 26 * 26 {
        format!("{a}{b}{c}")
    } else {
        format!("{a}{b}{c}{}", i / (26 * 26 * 26))
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Generates a random but valid world.
///
/// Process `k` supplies the products `i` with `i % processes == k` (or
/// product `k % products` when that set is empty). The first third of the
/// processes are pure sources; the others draw each non-output product as an
/// input with probability `density`, from domestic and foreign origins.
/// With `density == 0` every process is a source and the use table is empty.
///
/// The result is a pure function of `spec`.
pub fn generate_synthetic_world(spec: SyntheticSpec) -> SupplyUseTables {
    assert!(spec.countries >= 1 && spec.products >= 1 && spec.processes >= 1);
    assert!((0.0..=1.0).contains(&spec.density), "density must lie in [0, 1]");
    let SyntheticSpec {
        countries: nc,
        products: np,
        processes: nk,
        density,
        seed,
    } = spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_regions = nc.min(MAX_REGIONS);
    let data = RegistryData {
        countries: (0..nc)
            .map(|i| Entity::new(country_code(i), format!("Country {i}")))
            .collect(),
        products: (0..np)
            .map(|i| Entity::new(format!("p{i:03}"), format!("Product {i}")))
            .collect(),
        processes: (0..nk)
            .map(|i| Entity::new(format!("k{i:03}"), format!("Process {i}")))
            .collect(),
        purposes: DEFAULT_PURPOSES
            .iter()
            .map(|p| Entity::new(*p, *p))
            .collect(),
        regions: (0..nc)
            .map(|i| (country_code(i), format!("Region {:02}", i * n_regions / nc)))
            .collect(),
    };
    let registry = Registry::new(data).expect("generated registry is valid");
    let food = registry.food_purpose();
    let purpose = |code: &str| registry.purpose(code).expect("standard purpose");
    let (stock, balancing, losses, other) = (
        purpose("stock_addition"),
        purpose("balancing"),
        purpose("losses"),
        purpose("other"),
    );

    let outputs: Vec<Vec<usize>> = (0..nk)
        .map(|k| {
            let own: Vec<usize> = (0..np).filter(|i| i % nk == k).collect();
            if own.is_empty() {
                vec![k % np]
            } else {
                own
            }
        })
        .collect();
    let n_sources = nk.div_ceil(3).max(1);

    let mut supply = SupplyTable::new();
    let mut uses = UseTable::new();
    let mut demand = DemandTable::new();
    let mut supplied_cells = BTreeSet::new();

    for c in 0..nc {
        for k in 0..nk {
            let active = k % nc == c || rng.gen_bool(ACTIVE_PROBABILITY);
            if !active {
                continue;
            }
            for &i in &outputs[k] {
                let amount = round3(rng.gen_range(10.0..1000.0));
                supply.insert(
                    SupplyKey {
                        country: CountryId::from(c),
                        process: ProcessId::from(k),
                        product: ProductId::from(i),
                    },
                    amount,
                );
                supplied_cells.insert((c, i));
            }
            if k < n_sources || density == 0.0 {
                continue;
            }
            for j in 0..np {
                if outputs[k].contains(&j) || !rng.gen_bool(density) {
                    continue;
                }
                let mut origins = BTreeSet::new();
                if rng.gen_bool(0.7) {
                    origins.insert(c);
                }
                let n_foreign = rng.gen_range(0..=2usize).min(nc - 1);
                for _ in 0..n_foreign {
                    origins.insert(rng.gen_range(0..nc));
                }
                if origins.is_empty() {
                    origins.insert(c);
                }
                for d in origins {
                    uses.insert(
                        UseKey {
                            origin: CountryId::from(d),
                            product: ProductId::from(j),
                            user: CountryId::from(c),
                            process: ProcessId::from(k),
                        },
                        round3(rng.gen_range(1.0..100.0)),
                    );
                }
            }
        }
    }

    let mut put = |origin: usize, product: usize, dest: usize, purpose, amount: f64| {
        demand.insert(
            DemandKey {
                origin: CountryId::from(origin),
                product: ProductId::from(product),
                destination: CountryId::from(dest),
                purpose,
            },
            round3(amount),
        );
    };
    for &(c, i) in &supplied_cells {
        if rng.gen_bool(0.8) {
            put(c, i, c, food, rng.gen_range(5.0..200.0));
        }
        if rng.gen_bool(0.3) {
            let p = if rng.gen_bool(0.5) { losses } else { other };
            put(c, i, c, p, rng.gen_range(1.0..50.0));
        }
        if nc > 1 {
            for _ in 0..rng.gen_range(0..=2usize) {
                let d = rng.gen_range(0..nc);
                if d != c {
                    put(c, i, d, food, rng.gen_range(1.0..50.0));
                }
            }
        }
        if rng.gen_bool(0.1) {
            put(c, i, c, stock, -rng.gen_range(1.0..20.0));
        }
        if rng.gen_bool(0.05) {
            put(c, i, c, balancing, rng.gen_range(-20.0..20.0));
        }
    }

    SupplyUseTables::new(registry, supply, uses, demand).expect("generated tables are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{write_tables, TablePaths};

    fn written(spec: SyntheticSpec) -> Vec<Vec<u8>> {
        let dir = tempfile::tempdir().unwrap();
        let paths = TablePaths::in_dir(dir.path());
        write_tables(&generate_synthetic_world(spec), &paths).unwrap();
        [paths.registry, paths.supply, paths.uses, paths.demand]
            .iter()
            .map(|p| std::fs::read(p).unwrap())
            .collect()
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = SyntheticSpec::new(3, 2, 2, 1.0, 7);
        assert_eq!(written(spec), written(spec));
        assert_ne!(written(spec), written(SyntheticSpec { seed: 8, ..spec }));
    }

    #[test]
    fn zero_density_has_only_sources() {
        let t = generate_synthetic_world(SyntheticSpec::new(5, 6, 4, 0.0, 3));
        assert!(t.uses().is_empty());
        assert!(!t.supply().is_empty());
    }

    #[test]
    fn every_product_is_supplied_somewhere() {
        for (nc, np, nk) in [(3, 2, 2), (4, 10, 3), (2, 3, 7), (1, 1, 1)] {
            let t = generate_synthetic_world(SyntheticSpec::new(nc, np, nk, 0.5, 11));
            for i in 0..np {
                assert!(
                    t.supply().iter().any(|(k, &v)| k.product.index() == i && v > 0.0),
                    "product {i} unsupplied in {nc}x{np}x{nk}"
                );
            }
        }
    }

    #[test]
    fn has_a_pure_source_process() {
        let t = generate_synthetic_world(SyntheticSpec::new(4, 5, 5, 1.0, 2));
        let with_inputs: BTreeSet<_> = t.uses().keys().map(|k| (k.user, k.process)).collect();
        assert!(t
            .supply()
            .keys()
            .any(|k| !with_inputs.contains(&(k.country, k.process))));
    }

    #[test]
    fn country_codes_are_unique() {
        let codes: BTreeSet<String> = (0..20_000).map(country_code).collect();
        assert_eq!(codes.len(), 20_000);
    }
}
