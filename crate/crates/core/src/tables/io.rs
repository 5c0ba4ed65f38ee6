use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Trim};

use super::registry::{Entity, EntityKind, Registry, RegistryData};
use super::{DemandKey, DemandTable, SupplyKey, SupplyTable, SupplyUseTables, UseKey, UseTable};
use crate::error::{Error, Result};
use crate::format;

pub const SUPPLY_HEADER: [&str; 4] = ["country", "process", "product", "amount"];
pub const USE_HEADER: [&str; 5] = ["origin_country", "product", "user_country", "process", "amount"];
pub const DEMAND_HEADER: [&str; 5] = [
    "origin_country",
    "product",
    "demand_country",
    "purpose",
    "amount",
];
pub const REGISTRY_HEADER: [&str; 4] = ["kind", "code", "name", "region"];

/// Locations of the four input files.
#[derive(Debug, Clone)]
pub struct TablePaths {
    pub supply: PathBuf,
    pub uses: PathBuf,
    pub demand: PathBuf,
    pub registry: PathBuf,
}

impl TablePaths {
    /// `supply.csv`, `use.csv`, `demand.csv` and `registry.csv` inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        TablePaths {
            supply: dir.join("supply.csv"),
            uses: dir.join("use.csv"),
            demand: dir.join("demand.csv"),
            registry: dir.join("registry.csv"),
        }
    }
}

struct CsvFile<'a> {
    path: &'a Path,
    records: Vec<(u64, StringRecord)>,
}

fn read_csv<'a>(path: &'a Path, header: &[&str]) -> Result<CsvFile<'a>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if file.metadata().map(|m| m.len() == 0).unwrap_or(false) {
        return Ok(CsvFile {
            path,
            records: Vec::new(),
        });
    }
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_reader(file);
    let found = reader
        .headers()
        .map_err(|e| Error::schema(path, 1, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::schema(
            path,
            1,
            format!(
                "expected header '{}', found '{}'",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::schema(path, line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        records.push((line, row));
    }
    Ok(CsvFile { path, records })
}

fn parse_amount(path: &Path, line: u64, raw: &str) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::schema(
            path,
            line,
            format!("amount '{raw}' is not a finite decimal number"),
        )),
    }
}

fn lookup<T>(path: &Path, line: u64, kind: &str, code: &str, found: Option<T>) -> Result<T> {
    found.ok_or_else(|| Error::validation(path, line, format!("unknown {kind} code '{code}'")))
}

fn load_registry(path: &Path) -> Result<Registry> {
    let file = read_csv(path, &REGISTRY_HEADER)?;
    let mut data = RegistryData::default();
    for (line, row) in &file.records {
        let line = *line;
        let kind = EntityKind::parse(&row[0]).ok_or_else(|| {
            Error::schema(
                path,
                line,
                format!("kind '{}' is not one of country, product, process, purpose", &row[0]),
            )
        })?;
        let entity = Entity::new(&row[1], &row[2]);
        let region = &row[3];
        if kind != EntityKind::Country && !region.is_empty() {
            return Err(Error::validation(
                path,
                line,
                format!("region is only allowed for countries, found on {}", kind.as_str()),
            ));
        }
        let list = match kind {
            EntityKind::Country => &mut data.countries,
            EntityKind::Product => &mut data.products,
            EntityKind::Process => &mut data.processes,
            EntityKind::Purpose => &mut data.purposes,
        };
        if list.iter().any(|e| e.code == entity.code) {
            return Err(Error::validation(
                path,
                line,
                format!("duplicate {} code '{}'", kind.as_str(), entity.code),
            ));
        }
        if kind == EntityKind::Country && !region.is_empty() {
            data.regions.insert(entity.code.clone(), region.to_owned());
        }
        list.push(entity);
    }
    Registry::new(data).map_err(|e| Error::validation(path, 0, e.to_string()))
}

fn insert_unique<K: Ord, D: std::fmt::Debug>(
    map: &mut std::collections::BTreeMap<K, f64>,
    key: K,
    value: f64,
    path: &Path,
    line: u64,
    describe: D,
) -> Result<()> {
    if map.insert(key, value).is_some() {
        return Err(Error::validation(
            path,
            line,
            format!("duplicate key {describe:?}; rows are not summed"),
        ));
    }
    Ok(())
}

fn load_supply(path: &Path, reg: &Registry) -> Result<SupplyTable> {
    let file = read_csv(path, &SUPPLY_HEADER)?;
    let mut table = SupplyTable::new();
    for (line, row) in &file.records {
        let line = *line;
        let country = lookup(file.path, line, "country", &row[0], reg.country(&row[0]))?;
        let process = lookup(file.path, line, "process", &row[1], reg.process(&row[1]))?;
        let product = lookup(file.path, line, "product", &row[2], reg.product(&row[2]))?;
        let amount = parse_amount(file.path, line, &row[3])?;
        if amount < 0.0 {
            return Err(Error::validation(path, line, "supply amounts must be non-negative"));
        }
        let key = SupplyKey {
            country,
            process,
            product,
        };
        insert_unique(&mut table, key, amount, path, line, (&row[0], &row[1], &row[2]))?;
    }
    Ok(table)
}

fn load_uses(path: &Path, reg: &Registry) -> Result<UseTable> {
    let file = read_csv(path, &USE_HEADER)?;
    let mut table = UseTable::new();
    for (line, row) in &file.records {
        let line = *line;
        let origin = lookup(path, line, "country", &row[0], reg.country(&row[0]))?;
        let product = lookup(path, line, "product", &row[1], reg.product(&row[1]))?;
        let user = lookup(path, line, "country", &row[2], reg.country(&row[2]))?;
        let process = lookup(path, line, "process", &row[3], reg.process(&row[3]))?;
        let amount = parse_amount(path, line, &row[4])?;
        if amount < 0.0 {
            return Err(Error::validation(path, line, "use amounts must be non-negative"));
        }
        let key = UseKey {
            origin,
            product,
            user,
            process,
        };
        insert_unique(
            &mut table,
            key,
            amount,
            path,
            line,
            (&row[0], &row[1], &row[2], &row[3]),
        )?;
    }
    Ok(table)
}

fn load_demand(path: &Path, reg: &Registry) -> Result<DemandTable> {
    let file = read_csv(path, &DEMAND_HEADER)?;
    let mut table = DemandTable::new();
    for (line, row) in &file.records {
        let line = *line;
        let origin = lookup(path, line, "country", &row[0], reg.country(&row[0]))?;
        let product = lookup(path, line, "product", &row[1], reg.product(&row[1]))?;
        let destination = lookup(path, line, "country", &row[2], reg.country(&row[2]))?;
        let purpose = lookup(path, line, "purpose", &row[3], reg.purpose(&row[3]))?;
        let amount = parse_amount(path, line, &row[4])?;
        if amount < 0.0 && !reg.purpose_allows_negative(purpose) {
            return Err(Error::validation(
                path,
                line,
                format!(
                    "sign rule: negative demand ({amount}) is only permitted for purposes balancing and stock_addition, not '{}'",
                    &row[3]
                ),
            ));
        }
        let key = DemandKey {
            origin,
            product,
            destination,
            purpose,
        };
        insert_unique(
            &mut table,
            key,
            amount,
            path,
            line,
            (&row[0], &row[1], &row[2], &row[3]),
        )?;
    }
    Ok(table)
}

/// Loads and validates the four CSV inputs.
pub fn load_tables(paths: &TablePaths) -> Result<SupplyUseTables> {
    let registry = load_registry(&paths.registry)?;
    let supply = load_supply(&paths.supply, &registry)?;
    let uses = load_uses(&paths.uses, &registry)?;
    let demand = load_demand(&paths.demand, &registry)?;
    SupplyUseTables::new(registry, supply, uses, demand)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes the tables in the input CSV layout. Amounts are written in their
/// shortest exact form so that loading them back is lossless.
pub fn write_tables(tables: &SupplyUseTables, paths: &TablePaths) -> Result<()> {
    let reg = tables.registry();
    fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
        move |e| Error::io(path, e)
    }

    let mut w = create(&paths.registry)?;
    let registry_path = paths.registry.as_path();
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", REGISTRY_HEADER.join(","))?;
        for c in reg.countries() {
            let region = reg.data().regions.get(&c.code).map(String::as_str).unwrap_or("");
            writeln!(w, "country,{},{},{}", c.code, quote(&c.name), quote(region))?;
        }
        for (kind, list) in [
            ("product", reg.products()),
            ("process", reg.processes()),
            ("purpose", reg.purposes()),
        ] {
            for e in list {
                writeln!(w, "{kind},{},{},", e.code, quote(&e.name))?;
            }
        }
        w.flush()
    })()
    .map_err(io(registry_path))?;

    let mut w = create(&paths.supply)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", SUPPLY_HEADER.join(","))?;
        for (k, v) in tables.supply() {
            writeln!(
                w,
                "{},{},{},{}",
                reg.country_code(k.country),
                reg.process_code(k.process),
                reg.product_code(k.product),
                format::exact(*v)
            )?;
        }
        w.flush()
    })()
    .map_err(io(&paths.supply))?;

    let mut w = create(&paths.uses)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", USE_HEADER.join(","))?;
        for (k, v) in tables.uses() {
            writeln!(
                w,
                "{},{},{},{},{}",
                reg.country_code(k.origin),
                reg.product_code(k.product),
                reg.country_code(k.user),
                reg.process_code(k.process),
                format::exact(*v)
            )?;
        }
        w.flush()
    })()
    .map_err(io(&paths.uses))?;

    let mut w = create(&paths.demand)?;
    (|| -> std::io::Result<()> {
        writeln!(w, "{}", DEMAND_HEADER.join(","))?;
        for (k, v) in tables.demand() {
            writeln!(
                w,
                "{},{},{},{},{}",
                reg.country_code(k.origin),
                reg.product_code(k.product),
                reg.country_code(k.destination),
                reg.purposes()[k.purpose.index()].code,
                format::exact(*v)
            )?;
        }
        w.flush()
    })()
    .map_err(io(&paths.demand))?;
    Ok(())
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
