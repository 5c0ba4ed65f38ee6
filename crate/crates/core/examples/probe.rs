use foodnet_core::*;
use std::time::Instant;
fn main() {
    let t0 = Instant::now();
    let t = tables::generate_synthetic_world(tables::SyntheticSpec::new(192, 125, 118, 0.05, 1));
    println!("gen {:?} supply {} uses {} demand {}", t0.elapsed(), t.supply().len(), t.uses().len(), t.demand().len());
    let t1 = Instant::now();
    let cal = calibration::calibrate(&t, CalibrationMode::Unified, 10);
    println!("cal {:?} diags {}", t1.elapsed(), cal.diagnostics.len());
    let e = Engine::new(&cal.model);
    println!("nnz {}", e.nnz());
    let runner = analysis::ScenarioRunner::new(&e);
    let mut ws = e.workspace();
    let t2 = Instant::now();
    let mut out = vec![0.0; e.n_cells()];
    let mut nz = 0;
    for c in 0..20u32 { runner.rl_into(&mut ws, (CountryId(c), ProductId(c*3)), &mut out); nz += out.iter().filter(|v| **v != 0.0).count(); }
    println!("20 scenarios {:?} avg nnz {}", t2.elapsed(), nz / 20);
}
