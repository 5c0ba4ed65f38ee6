use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use foodnet_core::analysis::{
    decompose_layer_effects, exposure_profile, layer_metrics, reexport_shares, relative_loss, sweep_to_dir,
    write_metrics_csv, ExposureEntry, SweepOptions, SweepPlan, SweepReader, DEFAULT_LINK_THRESHOLD,
};
use foodnet_core::calibration::{calibrate, write_diagnostics, DEFAULT_HORIZON};
use foodnet_core::format::sig9;
use foodnet_core::tables::{generate_synthetic_world, load_tables, write_tables, SyntheticSpec, TablePaths};
use foodnet_core::{CalibratedModel, CalibrationMode, CountryId, Engine, Parallelism, ProductId, Registry, ShockSpec, TrajectoryMode};
use foodnet_server::{AppState, Limits, Session};

use crate::config::RunConfig;
use crate::{
    CalibrateArgs, Command, DecomposeArgs, ExposureArgs, GenerateArgs, MetricsArgs, ReexportsArgs, ServeArgs,
    SimulateArgs, SweepArgs,
};

/// A missing or contradictory option; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn required<T: Clone>(flag: Option<T>, config: &Option<T>, name: &str) -> Result<T> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| usage(format!("--{name} is required (on the command line or in the config file)")))
}

fn existing(path: PathBuf, what: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

fn out_dir(flag: Option<PathBuf>, config: &RunConfig) -> Result<PathBuf> {
    let dir = required(flag, &config.out, "out")?;
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn out_file(flag: Option<PathBuf>, config: &RunConfig, default_name: &str) -> Result<PathBuf> {
    let path = required(flag, &config.out, "out")?;
    let path = if path.is_dir() { path.join(default_name) } else { path };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    Ok(path)
}

fn load_model(flag: Option<PathBuf>, config: &RunConfig) -> Result<CalibratedModel> {
    let path = existing(required(flag, &config.model, "model")?, "model file")?;
    Ok(CalibratedModel::load(&path)?)
}

fn parallelism(flag: Option<usize>, config: &RunConfig) -> Parallelism {
    Parallelism::from_threads(flag.or(config.threads).unwrap_or(0))
}

fn product_list(reg: &Registry, codes: &[String]) -> Result<Vec<ProductId>> {
    codes
        .iter()
        .map(|c| {
            reg.product(c)
                .ok_or_else(|| foodnet_core::Error::Invalid(format!("unknown product code '{c}'")).into())
        })
        .collect()
}

fn country_list(reg: &Registry, codes: &[String]) -> Result<Vec<CountryId>> {
    codes
        .iter()
        .map(|c| {
            reg.country(c)
                .ok_or_else(|| foodnet_core::Error::Invalid(format!("unknown country code '{c}'")).into())
        })
        .collect()
}

pub fn run(command: Command, config: &RunConfig) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a, config),
        Command::Calibrate(a) => cmd_calibrate(a, config),
        Command::Simulate(a) => simulate(a, config),
        Command::Sweep(a) => sweep(a, config),
        Command::Metrics(a) => metrics(a, config),
        Command::Exposure(a) => exposure(a, config),
        Command::Decompose(a) => decompose(a, config),
        Command::Reexports(a) => reexports(a, config),
        Command::Serve(a) => serve(a, config),
    }
}

fn generate(a: GenerateArgs, config: &RunConfig) -> Result<()> {
    if a.countries == 0 || a.products == 0 || a.processes == 0 {
        return Err(usage("countries, products and processes must be positive"));
    }
    if !(0.0..=1.0).contains(&a.density) {
        return Err(usage("density must lie in [0, 1]"));
    }
    let dir = out_dir(a.out, config)?;
    let tables = generate_synthetic_world(SyntheticSpec::new(a.countries, a.products, a.processes, a.density, a.seed));
    write_tables(&tables, &TablePaths::in_dir(&dir))?;
    println!(
        "wrote {} supply, {} use and {} demand entries to {}",
        tables.supply().len(),
        tables.uses().len(),
        tables.demand().len(),
        dir.display()
    );
    Ok(())
}

fn cmd_calibrate(a: CalibrateArgs, config: &RunConfig) -> Result<()> {
    let input = existing(required(a.input, &config.input, "input")?, "input directory")?;
    let mode: CalibrationMode = match a.mode.or_else(|| config.mode.clone()) {
        Some(m) => m.parse()?,
        None => CalibrationMode::default(),
    };
    let horizon = a.horizon.or(config.horizon).unwrap_or(DEFAULT_HORIZON);
    let paths = TablePaths::in_dir(&input);
    for p in [&paths.supply, &paths.uses, &paths.demand, &paths.registry] {
        existing(p.clone(), "input file")?;
    }
    let dir = out_dir(a.out, config)?;
    let tables = load_tables(&paths)?;
    let cal = calibrate(&tables, mode, horizon);
    cal.model.save(dir.join("model.json"))?;
    write_diagnostics(dir.join("diagnostics.csv"), &cal.diagnostics)?;
    println!(
        "model {} written to {} ({} diagnostics)",
        cal.model.fingerprint(),
        dir.join("model.json").display(),
        cal.diagnostics.len()
    );
    Ok(())
}

fn parse_shocks(reg: &Registry, shocks: &[String], all_products: Option<&str>) -> Result<ShockSpec> {
    let mut pairs = Vec::new();
    for s in shocks {
        let (c, p) = s
            .split_once(':')
            .ok_or_else(|| foodnet_core::Error::Invalid(format!("shock '{s}' is not of the form COUNTRY:PRODUCT")))?;
        pairs.push((c.to_owned(), p.to_owned()));
    }
    let mut spec = ShockSpec::from_codes(reg, &pairs)?;
    if let Some(code) = all_products {
        let c = reg
            .country(code)
            .ok_or_else(|| foodnet_core::Error::Invalid(format!("unknown country code '{code}'")))?;
        for &(c, p) in ShockSpec::all_products(reg, c).targets() {
            spec.insert(c, p);
        }
    }
    Ok(spec)
}

fn simulate(a: SimulateArgs, config: &RunConfig) -> Result<()> {
    let model = load_model(a.model, config)?;
    let shocks = if a.shocks.is_empty() {
        config.shocks.clone().unwrap_or_default()
    } else {
        a.shocks
    };
    let all = a.shock_all_products.or_else(|| config.shock_all_products.clone());
    let mut shock = parse_shocks(&model.registry, &shocks, all.as_deref())?;
    if let Some(h) = a.horizon.or(config.horizon) {
        shock = shock.with_horizon(h);
    }
    let dir = out_dir(a.out, config)?;
    let engine = Engine::new(&model);
    let mode = if a.full { TrajectoryMode::Full } else { TrajectoryMode::Lean };
    let mut baseline_spec = ShockSpec::baseline();
    baseline_spec.horizon = shock.horizon;
    let baseline = engine.run(&baseline_spec, mode)?;
    let shocked = engine.run(&shock, mode)?;
    let mut report = relative_loss(engine.registry(), &baseline, &shocked, None, a.series)?;
    report.shock = Some(shock.clone());
    let reg = engine.registry();
    baseline.write_csv(reg, dir.join("baseline.csv"))?;
    shocked.write_csv(reg, dir.join("shocked.csv"))?;
    let series = dir.join("loss_series.csv");
    report.write_csv(
        reg,
        dir.join("loss.csv"),
        dir.join("loss_regions.csv"),
        a.series.then_some(series.as_path()),
    )?;
    if !shocked.flow_diagnostics.is_empty() {
        let path = dir.join("flow_diagnostics.csv");
        let mut w = std::io::BufWriter::new(fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        writeln!(w, "step,country,product,kind,amount")?;
        for d in &shocked.flow_diagnostics {
            let (c, i) = reg.cell_parts(d.cell);
            let kind = match d.kind {
                foodnet_core::engine::FlowLoss::Stranded => "stranded",
                foodnet_core::engine::FlowLoss::DroppedExport => "dropped_export",
            };
            writeln!(w, "{},{},{},{kind},{}", d.step, reg.country_code(c), reg.product_code(i), sig9(d.amount))?;
        }
        w.flush()?;
    }
    println!(
        "{} target(s), horizon {}; losses written to {}",
        shock.targets().len(),
        report.step,
        dir.join("loss.csv").display()
    );
    Ok(())
}

fn sweep(a: SweepArgs, config: &RunConfig) -> Result<()> {
    let model = load_model(a.model, config)?;
    let reg = &model.registry;
    let countries = country_list(reg, &a.countries)?;
    let products = product_list(reg, &a.products)?;
    let plan = SweepPlan::new(
        reg,
        (!countries.is_empty()).then_some(countries.as_slice()),
        (!products.is_empty()).then_some(products.as_slice()),
    );
    let format = match a.format.or_else(|| config.format.clone()) {
        Some(f) => f.parse()?,
        None => Default::default(),
    };
    let opts = SweepOptions {
        chunk_len: a.chunk_len.or(config.chunk_len).unwrap_or(0),
        format,
        parallelism: parallelism(a.threads, config),
        max_new_chunks: a.max_chunks,
    };
    let dir = out_dir(a.out, config)?;
    let engine = Engine::new(&model);
    let summary = sweep_to_dir(&engine, &plan, &dir, &opts)?;
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)?).with_context(|| format!("cannot write {}", path.display()))?;
    println!(
        "{}/{} scenarios computed in {:.2} s ({:.1} scenarios/s); chunks: {} written, {} skipped, {} total; {}",
        summary.scenarios_computed,
        summary.scenarios_total,
        summary.seconds,
        summary.scenarios_per_second,
        summary.chunks_written,
        summary.chunks_skipped,
        summary.chunks_total,
        if summary.complete { "complete" } else { "incomplete, rerun to resume" }
    );
    Ok(())
}

fn metrics(a: MetricsArgs, config: &RunConfig) -> Result<()> {
    let model = load_model(a.model, config)?;
    let threshold = a.threshold.or(config.threshold).unwrap_or(DEFAULT_LINK_THRESHOLD);
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(usage("threshold must be a non-negative number"));
    }
    let path = out_file(a.out, config, "metrics.csv")?;
    write_metrics_csv(&model, &layer_metrics(&model, threshold), &path)?;
    println!("metrics for {} layers written to {}", model.registry.n_products(), path.display());
    Ok(())
}

fn exposure(a: ExposureArgs, config: &RunConfig) -> Result<()> {
    let model = load_model(a.model, config)?;
    let (c, p) = model.registry.resolve_target(&a.country, &a.product)?;
    let path = out_file(a.out, config, "exposure.csv")?;
    let engine = Engine::new(&model);
    let reg = engine.registry();
    let mut entries: Vec<ExposureEntry> = match a.sweep.or_else(|| config.sweep.clone()) {
        Some(dir) => {
            let reader = SweepReader::open(&dir)?;
            if reader.manifest().model_hash != engine.fingerprint() {
                return Err(foodnet_core::Error::ModelMismatch(format!("{} was swept with a different model", dir.display())).into());
            }
            if !reader.is_complete() {
                return Err(usage(format!("sweep in {} is incomplete", dir.display())));
            }
            reader
                .exposure(reg.cell(c, p))?
                .into_iter()
                .map(|((d, j), rl)| ExposureEntry {
                    shock_country: d,
                    shock_product: j,
                    rl,
                })
                .collect()
        }
        None => exposure_profile(&engine, c, p, &SweepPlan::all(reg), parallelism(a.threads, config)).entries,
    };
    entries.sort_by(|x, y| y.rl.total_cmp(&x.rl));
    write_lines(&path, "rank,shock_country,shock_product,rl", entries.iter().enumerate().map(|(k, e)| {
        format!(
            "{},{},{},{}",
            k + 1,
            reg.country_code(e.shock_country),
            reg.product_code(e.shock_product),
            sig9(e.rl)
        )
    }))?;
    println!("{} shocks ranked in {}", entries.len(), path.display());
    Ok(())
}

fn decompose(a: DecomposeArgs, config: &RunConfig) -> Result<()> {
    let model = load_model(a.model, config)?;
    let reg = &model.registry;
    let (d, j) = reg.resolve_target(&a.shock_country, &a.input_product)?;
    let observed = if a.products.is_empty() {
        (0..reg.n_products()).map(ProductId::from).collect()
    } else {
        product_list(reg, &a.products)?
    };
    let dir = out_dir(a.out, config)?;
    let engine = Engine::new(&model);
    let dec = decompose_layer_effects(&engine, d, j, &observed, parallelism(a.threads, config));
    write_lines(
        &dir.join("decomposition.csv"),
        "country,product,cross,within",
        dec.countries.iter().map(|p| {
            format!(
                "{},{},{},{}",
                reg.country_code(p.country),
                reg.product_code(p.pair.product),
                sig9(p.pair.cross),
                sig9(p.pair.within)
            )
        }),
    )?;
    write_lines(
        &dir.join("decomposition_regions.csv"),
        "region,product,cross,within",
        dec.regions.iter().map(|r| {
            format!(
                "{},{},{},{}",
                r.region,
                reg.product_code(r.pair.product),
                sig9(r.pair.cross),
                sig9(r.pair.within)
            )
        }),
    )?;
    println!("decomposition written to {}", dir.display());
    Ok(())
}

fn reexports(a: ReexportsArgs, config: &RunConfig) -> Result<()> {
    let model = load_model(a.model, config)?;
    let path = out_file(a.out, config, "reexports.csv")?;
    let engine = Engine::new(&model);
    let shares = reexport_shares(&engine);
    shares.write_csv(&engine, &path)?;
    println!(
        "shares written to {} ({} cells with nothing available)",
        path.display(),
        shares.diagnostics.len()
    );
    Ok(())
}

fn serve(a: ServeArgs, config: &RunConfig) -> Result<()> {
    let addr: SocketAddr = a
        .addr
        .or_else(|| config.addr.clone())
        .unwrap_or_else(|| "127.0.0.1:8080".into())
        .parse()
        .map_err(|e| usage(format!("invalid --addr: {e}")))?;
    let model_path = a.model.or_else(|| config.model.clone());
    let state = match model_path {
        Some(path) => {
            let model = CalibratedModel::load(existing(path, "model file")?)?;
            let sweep = a
                .sweep
                .or_else(|| config.sweep.clone())
                .map(SweepReader::open)
                .transpose()?;
            let defaults = Limits::default();
            let limits = Limits {
                max_targets: a.max_targets.unwrap_or(defaults.max_targets),
                max_horizon: a.max_horizon.unwrap_or(defaults.max_horizon),
                max_scenarios: a.max_scenarios.unwrap_or(defaults.max_scenarios),
                ..defaults
            };
            AppState::new(Session::new(model, sweep, limits)?)
        }
        None => AppState::empty(),
    };
    eprintln!("listening on http://{addr}");
    tokio::runtime::Runtime::new()?.block_on(foodnet_server::serve(addr, state))?;
    Ok(())
}

fn write_lines(path: &Path, header: &str, lines: impl Iterator<Item = String>) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}")?;
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}
