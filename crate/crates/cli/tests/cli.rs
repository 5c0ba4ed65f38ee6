use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use foodnet_core::analysis::relative_loss;
use foodnet_core::format::sig9;
use foodnet_core::{CalibratedModel, Engine, ShockSpec, TrajectoryMode};
use tempfile::TempDir;

fn foodnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foodnet")).args(args).output().expect("spawn foodnet")
}

fn ok(args: &[&str]) -> Output {
    let out = foodnet(args);
    assert!(
        out.status.success(),
        "foodnet {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct World {
    dir: TempDir,
}

impl World {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let w = dir.path().join("tables");
        let m = dir.path().join("model");
        ok(&["generate", "--countries", "7", "--products", "5", "--processes", "3", "--density", "0.4", "--seed", "3", "--out", s(&w)]);
        ok(&["calibrate", "--input", s(&w), "--out", s(&m)]);
        World { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn model(&self) -> PathBuf {
        self.path("model/model.json")
    }
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn simulate_matches_library() {
    let w = World::new();
    let out = w.path("sim");
    ok(&["simulate", "--model", s(&w.model()), "--shock", "AAA:p000", "--shock", "AAB:p002", "--series", "--out", s(&out)]);

    let model = CalibratedModel::load(w.model()).unwrap();
    let engine = Engine::new(&model);
    let reg = engine.registry();
    let shock = ShockSpec::from_codes(reg, &[("AAA".to_string(), "p000".to_string()), ("AAB".to_string(), "p002".to_string())]).unwrap();
    let base = engine.run(&ShockSpec::baseline(), TrajectoryMode::Lean).unwrap();
    let shocked = engine.run(&shock, TrajectoryMode::Lean).unwrap();
    let report = relative_loss(reg, &base, &shocked, None, false).unwrap();

    let text = read(out.join("loss.csv"));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("country,product,rl"));
    let mut n = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (c, p) = reg.resolve_target(f[0], f[1]).unwrap();
        assert_eq!(f[2], sig9(report.rl[reg.cell(c, p)]), "{line}");
        n += 1;
    }
    assert_eq!(n, reg.n_cells());
    for f in ["baseline.csv", "shocked.csv", "loss_regions.csv", "loss_series.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn no_shock_gives_zero_loss() {
    let w = World::new();
    let out = w.path("sim");
    ok(&["simulate", "--model", s(&w.model()), "--out", s(&out)]);
    for line in read(out.join("loss.csv")).lines().skip(1) {
        let rl: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(rl, 0.0, "{line}");
    }
}

#[test]
fn shock_all_products_equals_listing_them() {
    let w = World::new();
    let a = w.path("a");
    let b = w.path("b");
    ok(&["simulate", "--model", s(&w.model()), "--shock-all-products", "AAC", "--out", s(&a)]);
    let model = w.model();
    let mut args = vec!["simulate", "--model", s(&model), "--out", s(&b)];
    let shocks: Vec<String> = (0..5).map(|p| format!("AAC:p{p:03}")).collect();
    for sh in &shocks {
        args.extend(["--shock", sh]);
    }
    ok(&args);
    assert_eq!(read(a.join("loss.csv")), read(b.join("loss.csv")));
}

#[test]
fn shock_errors_exit_2() {
    let w = World::new();
    let out = w.path("x");
    let unknown = foodnet(&["simulate", "--model", s(&w.model()), "--shock", "ZZZ:p000", "--out", s(&out)]);
    assert_eq!(code(&unknown), 2);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("ZZZ"));
    let malformed = foodnet(&["simulate", "--model", s(&w.model()), "--shock", "AAA-p000", "--out", s(&out)]);
    assert_eq!(code(&malformed), 2);
    let missing = foodnet(&["simulate", "--shock", "AAA:p000", "--out", s(&out)]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn negative_food_demand_is_rejected() {
    let w = World::new();
    let tables = w.path("tables");
    let demand = read(tables.join("demand.csv"));
    let mut lines: Vec<String> = demand.lines().map(str::to_owned).collect();
    lines.push("AAA,p000,AAB,food,-5".into());
    fs::write(tables.join("demand.csv"), lines.join("\n") + "\n").unwrap();
    let out = foodnet(&["calibrate", "--input", s(&tables), "--out", s(&w.path("m2"))]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sign rule"), "{err}");
    assert!(err.contains("demand.csv"), "{err}");
}

#[test]
fn schema_error_exit_1() {
    let w = World::new();
    let tables = w.path("tables");
    fs::write(tables.join("supply.csv"), "country,product,amount\nAAA,p000,1\n").unwrap();
    let out = foodnet(&["calibrate", "--input", s(&tables), "--out", s(&w.path("m2"))]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verbatim_mode_reports_closure() {
    let w = World::new();
    let m = w.path("verbatim");
    ok(&["calibrate", "--input", s(&w.path("tables")), "--mode", "verbatim", "--out", s(&m)]);
    let diag = read(m.join("diagnostics.csv"));
    assert!(diag.contains("share_closure_deviation"), "{diag}");
    let unified = read(w.path("model/diagnostics.csv"));
    assert!(!unified.contains("share_closure_deviation"));
}

#[test]
fn config_file_fills_missing_options() {
    let w = World::new();
    let cfg = w.path("run.toml");
    let out = w.path("from_config");
    fs::write(
        &cfg,
        format!(
            "model = {:?}\nout = {:?}\nshocks = [\"AAA:p000\"]\nhorizon = 4\n",
            s(&w.model()),
            s(&out)
        ),
    )
    .unwrap();
    ok(&["--config", s(&cfg), "simulate"]);
    let direct = w.path("direct");
    ok(&["simulate", "--model", s(&w.model()), "--shock", "AAA:p000", "--horizon", "4", "--out", s(&direct)]);
    assert_eq!(read(out.join("loss.csv")), read(direct.join("loss.csv")));

    let flag = w.path("flag_wins");
    ok(&["--config", s(&cfg), "simulate", "--horizon", "10", "--out", s(&flag)]);
    assert_ne!(read(flag.join("loss.csv")), read(out.join("loss.csv")));

    fs::write(&cfg, "modle = \"x\"\n").unwrap();
    assert_eq!(code(&foodnet(&["--config", s(&cfg), "simulate"])), 1);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name().to_string_lossy().starts_with("chunk-"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn sweep_resume_and_threads() {
    let w = World::new();
    let one = w.path("one");
    let four = w.path("four");
    ok(&["sweep", "--model", s(&w.model()), "--threads", "1", "--out", s(&one)]);
    let partial = ok(&["sweep", "--model", s(&w.model()), "--threads", "4", "--max-chunks", "3", "--out", s(&four)]);
    assert!(String::from_utf8_lossy(&partial.stdout).contains("incomplete"));
    let resumed = ok(&["sweep", "--model", s(&w.model()), "--threads", "4", "--out", s(&four)]);
    assert!(String::from_utf8_lossy(&resumed.stdout).contains("3 skipped"));
    let a = dir_bytes(&one);
    assert_eq!(a.len(), 7);
    assert_eq!(a, dir_bytes(&four));

    let summary: serde_json::Value = serde_json::from_str(&read(four.join("summary.json"))).unwrap();
    assert_eq!(summary["complete"], true);
    assert_eq!(summary["scenarios_total"], 35);

    let other = w.path("other_model");
    ok(&["calibrate", "--input", s(&w.path("tables")), "--horizon", "3", "--out", s(&other)]);
    let clash = foodnet(&["sweep", "--model", s(&other.join("model.json")), "--out", s(&four)]);
    assert_eq!(code(&clash), 2);
}

#[test]
fn exposure_from_sweep_matches_computed() {
    let w = World::new();
    let sw = w.path("sweep");
    ok(&["sweep", "--model", s(&w.model()), "--format", "csv", "--out", s(&sw)]);
    let a = w.path("a.csv");
    let b = w.path("b.csv");
    ok(&["exposure", "--model", s(&w.model()), "--country", "AAB", "--product", "p001", "--out", s(&a)]);
    ok(&["exposure", "--model", s(&w.model()), "--country", "AAB", "--product", "p001", "--sweep", s(&sw), "--out", s(&b)]);
    let text = read(&a);
    assert_eq!(text, read(&b));
    let rls: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(rls.windows(2).all(|w| w[0] >= w[1]));
    assert!(text.lines().nth(1).unwrap().starts_with("1,"));
}

#[test]
fn metrics_decompose_reexports() {
    let w = World::new();
    let met = w.path("metrics.csv");
    ok(&["metrics", "--model", s(&w.model()), "--threshold", "0.5", "--out", s(&met)]);
    let text = read(&met);
    assert_eq!(text.lines().next(), Some("product,N,N_scc,N_wcc,L,mean_degree,mean_strength,herfindahl"));
    assert_eq!(text.lines().count(), 6);

    let dec = w.path("dec");
    ok(&["decompose", "--model", s(&w.model()), "--shock-country", "AAA", "--input-product", "p000", "--products", "p001,p002", "--out", s(&dec)]);
    let countries = read(dec.join("decomposition.csv"));
    assert_eq!(countries.lines().count(), 1 + 7 * 2);
    assert!(dec.join("decomposition_regions.csv").is_file());
    assert_eq!(code(&foodnet(&["decompose", "--model", s(&w.model()), "--shock-country", "AAA", "--input-product", "nope", "--out", s(&dec)])), 2);

    let re = w.path("re.csv");
    ok(&["reexports", "--model", s(&w.model()), "--out", s(&re)]);
    for line in read(&re).lines().skip(1) {
        let f: Vec<f64> = line.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
        let total = f[0] + f[1];
        assert!(total == 0.0 || (total - 1.0).abs() < 1e-8, "{line}");
    }
}
