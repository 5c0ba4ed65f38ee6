use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use foodnet_core::analysis::{
    decompose_layer_effects, exposure_profile, layer_metrics, simulate_loss, ExposureEntry, LayerMetrics,
    ScenarioRunner, SweepPlan,
};
use foodnet_core::{CountryId, Parallelism, ProductId, Registry, ShockSpec};

use crate::error::ApiError;
use crate::num::Sig9;
use crate::session::Session;
use crate::AppState;

type ApiResult<T> = Result<Json<T>, ApiError>;
type Params = Query<HashMap<String, String>>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/registry", get(registry))
        .route("/api/simulate", post(simulate))
        .route("/api/exposure", get(exposure))
        .route("/api/sweep/loss", get(sweep_loss))
        .route("/api/metrics/layers", get(metrics))
        .route("/api/decompose", get(decompose))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

fn session(state: &AppState) -> Result<Arc<Session>, ApiError> {
    state.session.clone().ok_or_else(ApiError::no_model)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("computation failed: {e}")))
}

fn param<'a>(q: &'a HashMap<String, String>, name: &str) -> Result<&'a str, ApiError> {
    q.get(name)
        .map(String::as_str)
        .ok_or_else(|| ApiError::bad_request(format!("missing query parameter '{name}'")))
}

fn number<T: std::str::FromStr>(q: &HashMap<String, String>, name: &str) -> Result<Option<T>, ApiError> {
    q.get(name)
        .map(|v| {
            v.parse()
                .map_err(|_| ApiError::bad_request(format!("query parameter '{name}' is not a valid number")))
        })
        .transpose()
}

/// Resolves codes; unknown codes are a 404 for lookups by URL.
fn lookup(reg: &Registry, country: &str, product: &str) -> Result<(CountryId, ProductId), ApiError> {
    let c = reg.country(country).ok_or_else(|| ApiError::not_found("country", country))?;
    let p = reg.product(product).ok_or_else(|| ApiError::not_found("product", product))?;
    Ok((c, p))
}

#[derive(Serialize)]
struct EntityOut {
    code: String,
    name: String,
}

#[derive(Serialize)]
struct CountryOut {
    code: String,
    name: String,
    region: Option<String>,
}

#[derive(Serialize)]
struct RegistryOut {
    model_hash: String,
    horizon: usize,
    countries: Vec<CountryOut>,
    products: Vec<EntityOut>,
    processes: Vec<EntityOut>,
    purposes: Vec<EntityOut>,
    regions: Vec<String>,
}

async fn registry(State(state): State<AppState>) -> ApiResult<RegistryOut> {
    let s = session(&state)?;
    let reg = s.engine.registry();
    let entities = |list: &[foodnet_core::tables::Entity]| {
        list.iter()
            .map(|e| EntityOut {
                code: e.code.clone(),
                name: e.name.clone(),
            })
            .collect()
    };
    Ok(Json(RegistryOut {
        model_hash: s.engine.fingerprint().to_owned(),
        horizon: s.engine.horizon(),
        countries: reg
            .countries()
            .iter()
            .enumerate()
            .map(|(c, e)| CountryOut {
                code: e.code.clone(),
                name: e.name.clone(),
                region: reg.region_name_of(CountryId::from(c)).map(str::to_owned),
            })
            .collect(),
        products: entities(reg.products()),
        processes: entities(reg.processes()),
        purposes: entities(reg.purposes()),
        regions: reg.regions().to_vec(),
    }))
}

#[derive(Debug, Deserialize, Serialize, Clone)]
struct TargetCodes {
    country: String,
    product: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateRequest {
    #[serde(default)]
    shock: Vec<TargetCodes>,
    horizon: Option<usize>,
    #[serde(default)]
    timeseries: bool,
}

#[derive(Serialize)]
struct CellRl {
    country: String,
    product: String,
    rl: Sig9,
}

#[derive(Serialize)]
struct RegionRl {
    region: String,
    product: String,
    rl: Sig9,
}

#[derive(Serialize)]
struct SeriesStep {
    step: usize,
    cells: Vec<CellRl>,
}

#[derive(Serialize)]
struct SimulateOut {
    model_hash: String,
    step: usize,
    shock: Vec<TargetCodes>,
    cells: Vec<CellRl>,
    regions: Vec<RegionRl>,
    #[serde(skip_serializing_if = "Option::is_none")]
    series: Option<Vec<SeriesStep>>,
}

fn cells(reg: &Registry, rl: &[f64]) -> Vec<CellRl> {
    rl.iter()
        .enumerate()
        .map(|(cell, &v)| {
            let (c, i) = reg.cell_parts(cell);
            CellRl {
                country: reg.country_code(c).to_owned(),
                product: reg.product_code(i).to_owned(),
                rl: Sig9(v),
            }
        })
        .collect()
}

async fn simulate(State(state): State<AppState>, body: Bytes) -> ApiResult<SimulateOut> {
    let s = session(&state)?;
    let req: SimulateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        SimulateRequest {
            shock: Vec::new(),
            horizon: None,
            timeseries: false,
        }
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))?
    };
    if req.shock.len() > s.limits.max_targets {
        return Err(ApiError::over_limit("number of shock targets", req.shock.len(), s.limits.max_targets));
    }
    if let Some(h) = req.horizon {
        if h > s.limits.max_horizon {
            return Err(ApiError::over_limit("horizon", h, s.limits.max_horizon));
        }
    }
    let reg = s.engine.registry();
    let mut shock = ShockSpec::baseline();
    for t in &req.shock {
        let c = reg.country(&t.country).ok_or_else(|| ApiError::unknown_code("country", &t.country))?;
        let p = reg.product(&t.product).ok_or_else(|| ApiError::unknown_code("product", &t.product))?;
        shock.insert(c, p);
    }
    if let Some(h) = req.horizon {
        shock = shock.with_horizon(h);
    }
    let echo: Vec<TargetCodes> = shock
        .targets()
        .iter()
        .map(|&(c, p)| TargetCodes {
            country: reg.country_code(c).to_owned(),
            product: reg.product_code(p).to_owned(),
        })
        .collect();
    let timeseries = req.timeseries;
    let out = blocking(move || -> Result<SimulateOut, ApiError> {
        let report = simulate_loss(&s.engine, &shock, timeseries)?;
        let reg = s.engine.registry();
        Ok(SimulateOut {
            model_hash: report.model_hash.clone(),
            step: report.step,
            shock: echo,
            cells: cells(reg, &report.rl),
            regions: report
                .regional
                .iter()
                .map(|r| RegionRl {
                    region: r.region.clone(),
                    product: reg.product_code(r.product).to_owned(),
                    rl: Sig9(r.rl),
                })
                .collect(),
            series: report.series.as_ref().map(|series| {
                series
                    .iter()
                    .enumerate()
                    .map(|(step, rl)| SeriesStep {
                        step,
                        cells: cells(reg, rl),
                    })
                    .collect()
            }),
        })
    })
    .await??;
    Ok(Json(out))
}

#[derive(Serialize)]
struct ExposureRow {
    rank: usize,
    shock_country: String,
    shock_product: String,
    rl: Sig9,
}

#[derive(Serialize)]
struct ExposureOut {
    model_hash: String,
    country: String,
    product: String,
    source: &'static str,
    total: usize,
    offset: usize,
    limit: usize,
    entries: Vec<ExposureRow>,
}

const DEFAULT_PAGE: usize = 50;

async fn exposure(State(state): State<AppState>, Query(q): Params) -> ApiResult<ExposureOut> {
    let s = session(&state)?;
    let (country, product) = (param(&q, "country")?.to_owned(), param(&q, "product")?.to_owned());
    let (c, p) = lookup(s.engine.registry(), &country, &product)?;
    let offset = number(&q, "offset")?.unwrap_or(0);
    let limit = number(&q, "limit")?.unwrap_or(DEFAULT_PAGE.min(s.limits.max_page));
    if limit > s.limits.max_page {
        return Err(ApiError::over_limit("page size", limit, s.limits.max_page));
    }
    if s.complete_sweep().is_none() {
        let n = s.engine.registry().n_countries() * s.engine.registry().n_products();
        if n > s.limits.max_scenarios {
            return Err(ApiError::over_limit("scenarios to compute", n, s.limits.max_scenarios));
        }
    }
    let out = blocking(move || -> Result<ExposureOut, ApiError> {
        let reg = s.engine.registry();
        let (source, entries): (&str, Vec<ExposureEntry>) = match s.complete_sweep() {
            Some(reader) => (
                "sweep",
                reader
                    .exposure(reg.cell(c, p))?
                    .into_iter()
                    .map(|((d, j), rl)| ExposureEntry {
                        shock_country: d,
                        shock_product: j,
                        rl,
                    })
                    .collect(),
            ),
            None => {
                let plan = SweepPlan::all(reg);
                ("computed", exposure_profile(&s.engine, c, p, &plan, Parallelism::default()).entries)
            }
        };
        let mut sorted = entries;
        sorted.sort_by(|a, b| b.rl.total_cmp(&a.rl));
        let total = sorted.len();
        let rows = sorted
            .iter()
            .enumerate()
            .skip(offset)
            .take(limit)
            .map(|(rank, e)| ExposureRow {
                rank,
                shock_country: reg.country_code(e.shock_country).to_owned(),
                shock_product: reg.product_code(e.shock_product).to_owned(),
                rl: Sig9(e.rl),
            })
            .collect();
        Ok(ExposureOut {
            model_hash: s.engine.fingerprint().to_owned(),
            country,
            product,
            source,
            total,
            offset,
            limit,
            entries: rows,
        })
    })
    .await??;
    Ok(Json(out))
}

#[derive(Serialize)]
struct SweepLossOut {
    model_hash: String,
    shock_country: String,
    shock_product: String,
    source: &'static str,
    cells: Vec<CellRl>,
}

async fn sweep_loss(State(state): State<AppState>, Query(q): Params) -> ApiResult<SweepLossOut> {
    let s = session(&state)?;
    let (country, product) = (param(&q, "shock_country")?.to_owned(), param(&q, "shock_product")?.to_owned());
    let target = lookup(s.engine.registry(), &country, &product)?;
    let out = blocking(move || -> Result<SweepLossOut, ApiError> {
        let stored = match &s.sweep {
            Some(reader) => reader.slice(target)?,
            None => None,
        };
        let (source, rl) = match stored {
            Some(rl) => ("sweep", rl),
            None => {
                let runner = ScenarioRunner::new(&s.engine);
                ("computed", runner.rl(&mut s.engine.workspace(), target))
            }
        };
        Ok(SweepLossOut {
            model_hash: s.engine.fingerprint().to_owned(),
            shock_country: country,
            shock_product: product,
            source,
            cells: cells(s.engine.registry(), &rl),
        })
    })
    .await??;
    Ok(Json(out))
}

#[derive(Serialize)]
struct LayerOut {
    product: String,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "N_scc")]
    n_scc: usize,
    #[serde(rename = "N_wcc")]
    n_wcc: usize,
    #[serde(rename = "L")]
    l: usize,
    mean_degree: Sig9,
    mean_strength: Sig9,
    herfindahl: Sig9,
}

#[derive(Serialize)]
struct MetricsOut {
    model_hash: String,
    threshold: Sig9,
    layers: Vec<LayerOut>,
}

async fn metrics(State(state): State<AppState>, Query(q): Params) -> ApiResult<MetricsOut> {
    let s = session(&state)?;
    let threshold: Option<f64> = number(&q, "threshold")?;
    if threshold.is_some_and(|t| !t.is_finite() || t < 0.0) {
        return Err(ApiError::bad_request("threshold must be a non-negative number"));
    }
    let out = blocking(move || {
        let computed: Vec<LayerMetrics>;
        let (threshold, layers) = match threshold {
            Some(t) if t != s.metrics_threshold => {
                computed = layer_metrics(&s.model, t);
                (t, &computed)
            }
            _ => (s.metrics_threshold, &s.metrics),
        };
        MetricsOut {
            model_hash: s.engine.fingerprint().to_owned(),
            threshold: Sig9(threshold),
            layers: layers
                .iter()
                .map(|m| LayerOut {
                    product: s.engine.registry().product_code(m.product).to_owned(),
                    n: m.n,
                    n_scc: m.n_scc,
                    n_wcc: m.n_wcc,
                    l: m.l,
                    mean_degree: Sig9(m.mean_degree),
                    mean_strength: Sig9(m.mean_strength),
                    herfindahl: Sig9(m.herfindahl),
                })
                .collect(),
        }
    })
    .await?;
    Ok(Json(out))
}

#[derive(Serialize)]
struct PairOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    country: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<String>,
    product: String,
    cross: Sig9,
    within: Sig9,
}

#[derive(Serialize)]
struct DecomposeOut {
    model_hash: String,
    shock_country: String,
    input_product: String,
    products: Vec<String>,
    countries: Vec<PairOut>,
    regions: Vec<PairOut>,
}

async fn decompose(State(state): State<AppState>, Query(q): Params) -> ApiResult<DecomposeOut> {
    let s = session(&state)?;
    let reg = s.engine.registry();
    let (country, input) = (param(&q, "shock_country")?, param(&q, "input_product")?);
    let (d, j) = lookup(reg, country, input)?;
    let observed: Vec<ProductId> = match q.get("products").filter(|v| !v.is_empty()) {
        Some(list) => list
            .split(',')
            .map(|code| reg.product(code.trim()).ok_or_else(|| ApiError::not_found("product", code.trim())))
            .collect::<Result<_, _>>()?,
        None => (0..reg.n_products()).map(ProductId::from).collect(),
    };
    let mut distinct = observed.clone();
    distinct.push(j);
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() > s.limits.max_scenarios {
        return Err(ApiError::over_limit("scenarios to compute", distinct.len(), s.limits.max_scenarios));
    }
    let out = blocking(move || {
        let reg = s.engine.registry();
        let dec = decompose_layer_effects(&s.engine, d, j, &observed, Parallelism::default());
        let code = |p: ProductId| reg.product_code(p).to_owned();
        DecomposeOut {
            model_hash: dec.model_hash.clone(),
            shock_country: reg.country_code(d).to_owned(),
            input_product: code(j),
            products: observed.iter().map(|&p| code(p)).collect(),
            countries: dec
                .countries
                .iter()
                .map(|c| PairOut {
                    country: Some(reg.country_code(c.country).to_owned()),
                    region: None,
                    product: code(c.pair.product),
                    cross: Sig9(c.pair.cross),
                    within: Sig9(c.pair.within),
                })
                .collect(),
            regions: dec
                .regions
                .iter()
                .map(|r| PairOut {
                    country: None,
                    region: Some(r.region.clone()),
                    product: code(r.pair.product),
                    cross: Sig9(r.pair.cross),
                    within: Sig9(r.pair.within),
                })
                .collect(),
        }
    })
    .await?;
    Ok(Json(out))
}
