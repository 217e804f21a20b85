use mpsub::fock::{subtract_gaussian, FockDensity};
use mpsub::gaussian::{covariance_from_squeeze, SqueezeSpec};
use mpsub::homodyne::{kurtosis_estimate, sample, PhaseSchedule};
use mpsub::mode_basis::CoefficientVector;
use mpsub::subtraction::ideal_spec;
use mpsub::tomography::{reconstruct, report_observables, TomographyConfig};

fn e0() -> CoefficientVector<f64> {
    CoefficientVector::basis_vector(1, 0).unwrap()
}

/// Ideal-subtracted pure 1.8 dB p-squeezed vacuum.
fn subtracted_state() -> FockDensity<f64> {
    let v = covariance_from_squeeze(&SqueezeSpec::<f64>::pure(&[1.8]).unwrap());
    subtract_gaussian(&v, &ideal_spec(e0()), None, 30, 1e-4).unwrap().0
}

#[test]
fn ideal_round_trip() {
    let truth = subtracted_state();
    let data = sample(&truth, &e0(), &PhaseSchedule::Uniform, 30_000, 1.0, 21).unwrap();
    let res = reconstruct(&data, &TomographyConfig::default()).unwrap();
    assert!(res.converged);
    assert!(res.log_likelihood.windows(2).all(|w| w[1] >= w[0]));
    let obs = report_observables(&res.state, Some(&truth)).unwrap();
    assert!(obs.fidelity.unwrap() > 0.99, "{obs:?}");
    assert!((obs.w0 + 1.0).abs() < 0.05, "{obs:?}");
}

#[test]
fn fidelity_improves_with_samples() {
    // single runs fluctuate by about the gap between the two sizes, so
    // compare the mean infidelity of independent runs
    let truth = subtracted_state();
    let mean_infidelity = |s: usize, seed0: u64| {
        (0..4)
            .map(|i| {
                let data = sample(&truth, &e0(), &PhaseSchedule::Uniform, s, 1.0, seed0 + i).unwrap();
                let res = reconstruct(&data, &TomographyConfig::default()).unwrap();
                1.0 - report_observables(&res.state, Some(&truth)).unwrap().fidelity.unwrap()
            })
            .sum::<f64>()
            / 4.0
    };
    let small = mean_infidelity(10_000, 100);
    let large = mean_infidelity(30_000, 200);
    assert!(large < small, "{large} vs {small}");
}

#[test]
fn loss_corrected_round_trip() {
    let truth = subtracted_state();
    let data = sample(&truth, &e0(), &PhaseSchedule::Uniform, 30_000, 0.875, 22).unwrap();
    let corrected = reconstruct(&data, &TomographyConfig { eta: 0.875, ..Default::default() }).unwrap();
    let raw = reconstruct(&data, &TomographyConfig::default()).unwrap();
    assert!(corrected.log_likelihood.windows(2).all(|w| w[1] >= w[0]));
    let c = report_observables(&corrected.state, Some(&truth)).unwrap();
    let r = report_observables(&raw.state, Some(&truth)).unwrap();
    assert!(c.fidelity.unwrap() > 0.98, "{c:?}");
    // uncorrected loss pulls W0 toward zero
    assert!(r.w0 > c.w0 + 0.1, "{} vs {}", r.w0, c.w0);
}

#[test]
fn gaussian_reconstruction_has_no_negative_kurtosis() {
    let v = covariance_from_squeeze(&SqueezeSpec::<f64>::pure(&[1.8]).unwrap());
    let g = mpsub::fock::gaussian_to_fock(&v, 30).unwrap();
    let data = sample(&g, &e0(), &PhaseSchedule::Uniform, 30_000, 1.0, 23).unwrap();
    let se = kurtosis_estimate(&data, 200, 24).unwrap().standard_error;
    let res = reconstruct(&data, &TomographyConfig::default()).unwrap();
    let k = report_observables(&res.state, None).unwrap().excess_kurtosis;
    assert!(k >= -3.0 * se, "{k} vs se {se}");
}
