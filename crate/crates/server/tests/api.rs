use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use foodnet_core::analysis::{simulate_loss, sweep_to_dir, SweepOptions, SweepPlan, SweepReader};
use foodnet_core::calibration::calibrate;
use foodnet_core::format::sig9;
use foodnet_core::tables::toy::ToyWorld;
use foodnet_core::{CalibratedModel, CalibrationMode, Engine, Parallelism, ShockSpec};
use foodnet_server::{router, AppState, Limits, Session};

/// Three countries in two regions. MAZ (maize) from UKR feeds pigs in DEU;
/// FRA grows its own maize and sells some to DEU.
fn toy() -> CalibratedModel {
    let mut w = ToyWorld::with_codes(&["UKR", "DEU", "FRA"], &["MAZ", "PIG"], &["K0", "K1"]);
    w.region(0, "Europe E").region(1, "Europe W").region(2, "Europe W");
    w.supply(0, 0, 0, 100.0);
    w.uses(0, 0, 1, 1, 60.0);
    w.demand(0, 0, 0, "food", 40.0);
    w.supply(2, 0, 0, 50.0);
    w.uses(2, 0, 1, 1, 20.0);
    w.demand(2, 0, 2, "food", 30.0);
    w.supply(1, 1, 1, 40.0);
    w.demand(1, 1, 1, "food", 30.0);
    w.demand(1, 1, 2, "food", 10.0);
    calibrate(&w.build(), CalibrationMode::Unified, 10).model
}

fn state(limits: Limits) -> AppState {
    AppState::new(Session::new(toy(), None, limits).unwrap())
}

async fn call(state: AppState, req: Request<Body>) -> (StatusCode, Value) {
    let res = router(state).oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn get(state: AppState, uri: &str) -> (StatusCode, Value) {
    call(state, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(state: AppState, uri: &str, body: &str) -> (StatusCode, Value) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_owned()))
        .unwrap();
    call(state, req).await
}

async fn raw_text(state: AppState, req: Request<Body>) -> String {
    let res = router(state).oneshot(req).await.unwrap();
    String::from_utf8(res.into_body().collect().await.unwrap().to_bytes().to_vec()).unwrap()
}

fn assert_error(body: &Value, code: &str) {
    assert_eq!(body["code"], code);
    assert!(body["message"].is_string());
    assert!(body.get("detail").is_some());
}

#[tokio::test]
async fn registry_requires_a_model() {
    let (status, body) = get(AppState::empty(), "/api/registry").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_error(&body, "no_model");
}

#[tokio::test]
async fn registry_lists_entities_and_regions() {
    let (status, body) = get(state(Limits::default()), "/api/registry").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["countries"].as_array().unwrap().len(), 3);
    assert_eq!(body["products"].as_array().unwrap().len(), 2);
    assert_eq!(body["countries"][1]["region"], "Europe W");
    assert_eq!(body["regions"], serde_json::json!(["Europe E", "Europe W"]));
}

#[tokio::test]
async fn empty_shock_gives_zero_losses() {
    let (status, body) = post(state(Limits::default()), "/api/simulate", r#"{"shock": []}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["cells"].as_array().unwrap().iter().all(|c| c["rl"] == 0.0));
    assert!(body.get("series").is_none());
}

#[tokio::test]
async fn simulate_matches_library_text() {
    let model = toy();
    let engine = Engine::new(&model);
    let reg = engine.registry();
    let shock = ShockSpec::new([reg.resolve_target("UKR", "MAZ").unwrap()]);
    let report = simulate_loss(&engine, &shock, false).unwrap();
    let req = Request::post("/api/simulate")
        .body(Body::from(r#"{"shock": [{"country": "UKR", "product": "MAZ"}]}"#))
        .unwrap();
    let text = raw_text(state(Limits::default()), req).await;
    for (cell, v) in report.rl.iter().enumerate() {
        let (c, i) = reg.cell_parts(cell);
        let fragment = format!(
            r#"{{"country":"{}","product":"{}","rl":{}}}"#,
            reg.country_code(c),
            reg.product_code(i),
            sig9(*v)
        );
        assert!(text.contains(&fragment), "{fragment} missing from {text}");
    }
    let pig_loss: f64 = report.rl[reg.cell(reg.country("DEU").unwrap(), reg.product("PIG").unwrap())];
    assert!(pig_loss > 0.0);
}

#[tokio::test]
async fn series_is_zero_before_the_chain_reaches_pigs() {
    let body = r#"{"shock": [{"country": "UKR", "product": "MAZ"}], "timeseries": true}"#;
    let (status, out) = post(state(Limits::default()), "/api/simulate", body).await;
    assert_eq!(status, StatusCode::OK);
    let series = out["series"].as_array().unwrap();
    assert_eq!(series.len(), 11);
    let pig = |step: usize| {
        series[step]["cells"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["country"] == "DEU" && c["product"] == "PIG")
            .unwrap()["rl"]
            .as_f64()
            .unwrap()
    };
    assert_eq!(pig(0), 0.0);
    assert_eq!(pig(1), 0.0);
    assert!(pig(2) > 0.0);
}

#[tokio::test]
async fn simulate_rejects_bad_requests() {
    let s = state(Limits {
        max_targets: 1,
        max_horizon: 20,
        ..Limits::default()
    });
    let (status, body) = post(s.clone(), "/api/simulate", r#"{"shock": [{"country": "XXX", "product": "MAZ"}]}"#).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "unknown_code");
    assert_eq!(body["detail"]["code"], "XXX");

    let two = r#"{"shock": [{"country": "UKR", "product": "MAZ"}, {"country": "FRA", "product": "MAZ"}]}"#;
    let (status, body) = post(s.clone(), "/api/simulate", two).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&body, "over_limit");

    let (status, _) = post(s.clone(), "/api/simulate", r#"{"horizon": 21}"#).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, body) = post(s.clone(), "/api/simulate", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "bad_request");

    let (status, body) = post(s, "/api/simulate", r#"{"horizon": 3}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["step"], 3);
}

#[tokio::test]
async fn exposure_is_sorted_and_paginated() {
    let s = state(Limits::default());
    let (status, full) = get(s.clone(), "/api/exposure?country=DEU&product=PIG&limit=100").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(full["source"], "computed");
    assert_eq!(full["total"], 6);
    let entries = full["entries"].as_array().unwrap();
    let rl: Vec<f64> = entries.iter().map(|e| e["rl"].as_f64().unwrap()).collect();
    assert!(rl.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(entries[0]["shock_country"], "DEU");
    assert_eq!(entries[0]["shock_product"], "PIG");
    assert!(entries
        .iter()
        .any(|e| e["shock_country"] == "UKR" && e["shock_product"] == "MAZ" && e["rl"].as_f64().unwrap() > 0.0));

    let mut paged = Vec::new();
    for offset in (0..6).step_by(4) {
        let (_, page) = get(s.clone(), &format!("/api/exposure?country=DEU&product=PIG&offset={offset}&limit=4")).await;
        paged.extend(page["entries"].as_array().unwrap().iter().cloned());
    }
    assert_eq!(&paged, entries);
}

#[tokio::test]
async fn exposure_errors() {
    let s = state(Limits {
        max_page: 10,
        ..Limits::default()
    });
    let (status, body) = get(s.clone(), "/api/exposure?country=ZZZ&product=PIG").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");
    let (status, _) = get(s.clone(), "/api/exposure?country=DEU&product=PIG&limit=11").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, body) = get(s.clone(), "/api/exposure?country=DEU").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_error(&body, "bad_request");
    let tight = state(Limits {
        max_scenarios: 2,
        ..Limits::default()
    });
    let (status, _) = get(tight, "/api/exposure?country=DEU&product=PIG").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn sweep_backed_answers_equal_computed_ones() {
    let model = toy();
    let dir = tempfile::tempdir().unwrap();
    let engine = Engine::new(&model);
    let opts = SweepOptions {
        parallelism: Parallelism::Sequential,
        ..SweepOptions::default()
    };
    sweep_to_dir(&engine, &SweepPlan::all(engine.registry()), dir.path(), &opts).unwrap();
    let with_sweep = AppState::new(
        Session::new(model.clone(), Some(SweepReader::open(dir.path()).unwrap()), Limits::default()).unwrap(),
    );
    let without = state(Limits::default());
    for uri in [
        "/api/sweep/loss?shock_country=UKR&shock_product=MAZ",
        "/api/sweep/loss?shock_country=FRA&shock_product=PIG",
        "/api/exposure?country=DEU&product=PIG",
        "/api/exposure?country=FRA&product=MAZ",
    ] {
        let (s1, mut a) = get(with_sweep.clone(), uri).await;
        let (s2, mut b) = get(without.clone(), uri).await;
        assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
        assert_eq!(a["source"], "sweep");
        assert_eq!(b["source"], "computed");
        a["source"] = Value::Null;
        b["source"] = Value::Null;
        assert_eq!(a, b, "{uri}");
    }
    let (status, _) = get(with_sweep, "/api/sweep/loss?shock_country=UKR&shock_product=RICE").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sweep_from_another_model_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let other = {
        let mut w = ToyWorld::new(1, 1, 1);
        w.supply(0, 0, 0, 1.0);
        w.demand(0, 0, 0, "food", 1.0);
        Engine::new(&calibrate(&w.build(), CalibrationMode::Unified, 10).model)
    };
    sweep_to_dir(&other, &SweepPlan::all(other.registry()), dir.path(), &SweepOptions::default()).unwrap();
    let reader = SweepReader::open(dir.path()).unwrap();
    assert!(Session::new(toy(), Some(reader), Limits::default()).is_err());
}

#[tokio::test]
async fn metrics_layers() {
    let s = state(Limits::default());
    let (status, body) = get(s.clone(), "/api/metrics/layers").await;
    assert_eq!(status, StatusCode::OK);
    let layers = body["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 2);
    let maize = &layers[0];
    assert_eq!(maize["product"], "MAZ");
    assert_eq!((maize["N"].as_u64(), maize["L"].as_u64()), (Some(3), Some(2)));
    assert_eq!(maize["N_wcc"], 3);
    assert_eq!(maize["N_scc"], 1);
    let (_, high) = get(s.clone(), "/api/metrics/layers?threshold=1e9").await;
    assert_eq!(high["layers"][0]["L"], 0);
    let (status, _) = get(s, "/api/metrics/layers?threshold=abc").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn decomposition_pairs() {
    let s = state(Limits::default());
    let (status, body) = get(s.clone(), "/api/decompose?shock_country=UKR&input_product=MAZ").await;
    assert_eq!(status, StatusCode::OK);
    for pair in body["countries"].as_array().unwrap().iter().chain(body["regions"].as_array().unwrap()) {
        if pair["product"] == "MAZ" {
            assert_eq!(pair["cross"], pair["within"]);
        }
    }
    let deu_pig = body["countries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["country"] == "DEU" && p["product"] == "PIG")
        .unwrap();
    assert!(deu_pig["cross"].as_f64().unwrap() > 0.0);
    assert_eq!(deu_pig["within"], 0.0);

    let (status, body) = get(s.clone(), "/api/decompose?shock_country=UKR&input_product=MAZ&products=PIG").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["countries"].as_array().unwrap().len(), 3);
    let (status, _) = get(s, "/api/decompose?shock_country=UKR&input_product=OATS").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn unknown_route_is_json_404() {
    let (status, body) = get(state(Limits::default()), "/api/nothing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_error(&body, "not_found");
}
