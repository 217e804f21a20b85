use mpsub::scenario::{self, presets, Analysis, ScenarioConfig};

fn analytic(name: &str) -> ScenarioConfig {
    let mut cfg = presets::get(name).unwrap();
    for m in &mut cfg.measurements {
        m.samples = 0;
        m.tomography = None;
    }
    cfg.analyses.retain(|a| *a != Analysis::Wigner);
    cfg
}

#[test]
fn epr_subtraction_moves_non_gaussianity() {
    let r = scenario::run(&analytic("fig2b-epr")).unwrap();
    let k = |l: &str| r.measurement(l).unwrap().kurtosis.clone().unwrap();
    assert!(k("EPR1").analytic < -0.5);
    assert!(k("EPR0").analytic > -0.1);
    assert_eq!(r.kurtosis_argmin().unwrap().label, "EPR1");
    let c = r.criteria.as_ref().unwrap();
    assert!(c.duan.as_ref().unwrap().witnessed && c.epr.as_ref().unwrap().witnessed);
}

#[test]
fn mismatch_degrades_negativity() {
    let r = scenario::run(&analytic("ed2-mode-mismatch")).unwrap();
    let w0: Vec<f64> = r.measurements.iter().map(|m| m.w0.unwrap()).collect();
    assert!(w0[0] < w0[1] && w0[1] < w0[2], "{w0:?}");
}

#[test]
fn vacuum_wigner() {
    let r = scenario::run(&presets::get("vacuum").unwrap()).unwrap();
    let w = r.measurements[0].wigner.as_ref().unwrap();
    assert!((w.integral - 1.0).abs() < 1e-3);
    let g = r.measurements[0].wigner_grid.as_ref().unwrap();
    // 2π W(0, 0)
    assert!((g.w0 - 1.0).abs() < 1e-12);
    assert!((g.min_value() - 0.0).abs() < 1e-6);
}

#[test]
fn sampled_kurtosis_tracks_analytic() {
    let mut cfg = presets::get("fig2a-subtract-HG0").unwrap();
    cfg.measurements.truncate(1);
    cfg.measurements[0].eta = 1.0;
    cfg.analyses = vec![Analysis::Kurtosis];
    let r = scenario::run(&cfg).unwrap();
    let k = r.measurements[0].kurtosis.as_ref().unwrap();
    let s = k.sampled.as_ref().unwrap();
    assert!((s.value - k.analytic).abs() < 4.0 * s.standard_error, "{k:?}");
    let seed_changed = ScenarioConfig { seed: cfg.seed + 1, ..cfg.clone() };
    let other = scenario::run(&seed_changed).unwrap();
    assert_ne!(other.measurements[0].kurtosis.as_ref().unwrap().sampled.as_ref().unwrap().value, s.value);
}

#[test]
fn cross_validation_on_presets() {
    for name in presets::names() {
        let mut cfg = analytic(name);
        cfg.cross_validate = true;
        let r = scenario::run(&cfg).unwrap();
        let tol = if r.state.modes <= 2 { 1e-3 } else { 5e-3 };
        for m in &r.measurements {
            if let Some(cv) = &m.cross_validation {
                assert!(cv.max_deviation < tol, "{name} {}: {cv:?}", m.label);
            }
        }
    }
}
