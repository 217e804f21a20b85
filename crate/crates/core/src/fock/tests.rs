use super::reduced::{reduced_basis_mode, reduced_mode_state};
use super::wigner::{integrated_marginal, negativity_witness, wigner, wigner_point, GridSpec, WignerGrid};
use super::*;
use crate::gaussian::{change_basis, covariance_from_squeeze, CovarianceMatrix, SqueezeSpec};
use crate::mode_basis::{builtin_basis, internal_phase, BasisName, CoefficientVector, ModeTransform};
use crate::scalar::cabs;
use crate::subtraction::{ideal_spec, lab_spec};
use crate::wick::{ComplexSecondMoments, SubtractedState};

fn diag(v: &[f64]) -> CovarianceMatrix<f64> {
    CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))).unwrap()
}

fn e(n: usize, k: usize) -> CoefficientVector<f64> {
    CoefficientVector::basis_vector(n, k).unwrap()
}

fn correlated_two_mode() -> CovarianceMatrix<f64> {
    let v = covariance_from_squeeze(&SqueezeSpec::from_f64(&[(2.5, -2.0), (1.5, -1.2)]).unwrap());
    let (c, s) = (0.6f64.cos(), 0.6f64.sin());
    let u = DMatrix::from_row_slice(
        2,
        2,
        &[Complex::new(c, 0.0), Complex::from_polar(s, 0.9), Complex::from_polar(-s, -0.9), Complex::new(c, 0.0)],
    );
    crate::gaussian::change_basis(&v, &ModeTransform::new(u, "mix").unwrap()).unwrap()
}

#[test]
fn vacuum_is_ground_state() {
    let r = gaussian_to_fock(&CovarianceMatrix::<f64>::vacuum(2).unwrap(), 5).unwrap();
    assert!((r.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
    assert!((r.purity() - 1.0).abs() < 1e-15);
}

#[test]
fn squeezed_vacuum_second_moment() {
    let r = gaussian_to_fock(&diag(&[2.0, 0.5]), 30).unwrap();
    let x = LadderOp::x(1, 0);
    assert!((r.expectation(&[x.clone(), x]).unwrap().re - 2.0).abs() < 1e-6);
    let p = LadderOp::p(1, 0);
    assert!((r.expectation(&[p.clone(), p]).unwrap().re - 0.5).abs() < 1e-6);
    assert!((r.purity() - 1.0).abs() < 1e-9);
}

#[test]
fn correlated_state_matches_wick() {
    let v = correlated_two_mode();
    let r = gaussian_to_fock(&v, 20).unwrap();
    let m = ComplexSecondMoments::from_covariance(&v);
    for len in [2, 4] {
        for w in OperatorWord::all(2, len) {
            let a = r.word_expectation(&w).unwrap();
            let b = crate::wick::gaussian_moment(&m, &w.to_ops(2).unwrap()).unwrap();
            assert!(cabs(a - b) < 1e-8 * (1.0 + cabs(b)), "{w:?}: {a} vs {b}");
        }
    }
}

#[test]
fn measured_state_at_cutoff_six() {
    let v = covariance_from_squeeze(&SqueezeSpec::<f64>::measured_hg());
    // four modes at cutoff 6 lose a few 1e-4 of the probability, which
    // pulls the largest variance down by about 1e-2
    let r = gaussian_to_fock_with(&v, &[6; 4], default_leak_bound(4)).unwrap();
    assert!(r.leak() < 5e-4, "{}", r.leak());
    for k in 0..4 {
        let x = LadderOp::x(4, k);
        let p = LadderOp::p(4, k);
        let got = r.expectation(&[x.clone(), x]).unwrap().re;
        assert!((got - v.var_x(k)).abs() < 2e-2, "{k}: {got} vs {}", v.var_x(k));
        assert!((r.expectation(&[p.clone(), p]).unwrap().re - v.var_p(k)).abs() < 2e-2);
    }
}

#[test]
fn truncation_error_reported() {
    let v = covariance_from_squeeze(&SqueezeSpec::<f64>::pure(&[10.0]).unwrap());
    assert!(matches!(gaussian_to_fock(&v, 4), Err(Error::Truncation { .. })));
}

#[test]
fn epr_marginal_is_thermal() {
    let v = diag(&[2.0, 0.5, 2.0, 0.5]);
    let ve = change_basis(&v, &builtin_basis(BasisName::Epr, 2).unwrap()).unwrap();
    let r = gaussian_to_fock(&ve, 14).unwrap();
    let red = r.partial_trace(&[0]).unwrap();
    let nbar = (ve.var_x(0) + ve.var_p(0)) / 4.0 - 0.5;
    let th = FockDensity::thermal(14, nbar).unwrap();
    assert!(trace_distance(&red, &th).unwrap() < 1e-6);
}

#[test]
fn partial_trace_basics() {
    let a = gaussian_to_fock(&diag(&[2.0, 0.5, 1.5, 0.8]), 12).unwrap();
    let f0 = gaussian_to_fock(&diag(&[2.0, 0.5]), 12).unwrap();
    let red = a.partial_trace(&[0]).unwrap();
    assert!(trace_distance(&red, &f0).unwrap() < 1e-9);
    assert!((red.trace() - 1.0).abs() < 1e-12);
    assert!((red.purity() - 1.0).abs() < 1e-6);
    assert_eq!(a.partial_trace(&[0, 1]).unwrap(), a);
    assert!(a.partial_trace(&[]).is_err());
}

#[test]
fn subtracted_squeezed_vacuum_is_squeezed_photon() {
    let v = diag(&[2.0, 0.5]);
    let (r, diag_) = subtract_gaussian(&v, &ideal_spec(e(1, 0)), None, 30, 1e-4).unwrap();
    // S(r)|1⟩ with tanh r = (Vx - 1)/(Vx + 1) for this orientation
    let t: f64 = (2.0 - 1.0) / (2.0 + 1.0) * 1.0;
    let t = t.abs();
    let ch = 1.0 / (1.0 - t * t).sqrt();
    let mut psi = vec![Complex::new(0.0, 0.0); 30];
    let mut lf = 0.0f64; // ln n!
    let mut l2 = 0.0f64; // ln (2n+1)!
    for n in 0..15 {
        if n > 0 {
            lf += (n as f64).ln();
            l2 += ((2 * n) as f64).ln() + ((2 * n + 1) as f64).ln();
        }
        let amp = ch.powf(-1.5) * (t / 2.0).powi(n as i32) * (0.5 * l2 - lf).exp();
        psi[2 * n + 1] = Complex::new(amp, 0.0);
    }
    let target = FockDensity::from_pure(&[30], &psi).unwrap();
    assert!(fidelity(&r, &target).unwrap() > 1.0 - 1e-6);
    assert!((diag_.heralding_weight - 0.125).abs() < 1e-9);
    assert!((r.parity_w0().unwrap() + 1.0).abs() < 1e-6);
    r.check_valid().unwrap();
}

#[test]
fn passthrough_leaves_state() {
    let v = diag(&[2.0, 0.5]);
    let g = gaussian_to_fock(&v, 20).unwrap();
    let spec = SubtractionSpec::new(e(1, 0), 1.0, 1.0, 1).unwrap();
    let (out, _) = g.apply_channel(&spec).unwrap();
    assert!(trace_distance(&out, &g).unwrap() < 1e-14);
}

#[test]
fn parity_and_purity_examples() {
    let vac = FockDensity::<f64>::number_state(10, 0).unwrap();
    assert!((vac.parity_w0().unwrap() - 1.0).abs() < 1e-15);
    assert!((vac.purity() - 1.0).abs() < 1e-15);
    assert!((fidelity(&vac, &vac).unwrap() - 1.0).abs() < 1e-12);
    let one = FockDensity::<f64>::number_state(10, 1).unwrap();
    assert!((one.parity_w0().unwrap() + 1.0).abs() < 1e-15);
    let th = FockDensity::<f64>::thermal(60, 0.5).unwrap();
    assert!((th.parity_w0().unwrap() - 0.5).abs() < 1e-9);
    assert!((th.purity() - 0.5).abs() < 1e-9);
    let (m2, _, k) = th.phase_averaged_kurtosis().unwrap();
    assert!((m2 - 2.0).abs() < 1e-9 && k.abs() < 1e-9);
    assert!(fidelity(&vac, &FockDensity::number_state(9, 0).unwrap()).is_err());
}

#[test]
fn measured_mode_zero_subtracted_purity() {
    let v = covariance_from_squeeze(&SqueezeSpec::<f64>::measured_hg()).marginal(&[0]).unwrap();
    let (r, _) = subtract_gaussian(&v, &ideal_spec(e(1, 0)), None, 30, 1e-4).unwrap();
    assert!((r.purity() - 0.53).abs() < 0.05, "{}", r.purity());
}

#[test]
fn channel_ignores_global_phase() {
    let v = correlated_two_mode();
    let c = CoefficientVector::<f64>::from_f64_pairs(&[(0.8, 0.1), (0.2, -0.5)]).unwrap();
    let rot = CoefficientVector::new(c.entries().iter().map(|z| z * Complex::from_polar(1.0, 1.1)).collect()).unwrap();
    let (a, _) = subtract_gaussian(&v, &lab_spec(c), None, 12, 1e-4).unwrap();
    let (b, _) = subtract_gaussian(&v, &lab_spec(rot), None, 12, 1e-4).unwrap();
    assert!(trace_distance(&a, &b).unwrap() < 1e-12);
}

#[test]
fn subtraction_is_mode_selective() {
    let v = diag(&[2.0, 0.5, 1.5, 0.8]);
    let (a, _) = subtract_gaussian(&v, &ideal_spec(e(2, 0)), None, 14, 1e-4).unwrap();
    let g = gaussian_to_fock(&v, 14).unwrap();
    let d = trace_distance(&a.partial_trace(&[1]).unwrap(), &g.partial_trace(&[1]).unwrap()).unwrap();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn reduced_path_matches_full_oracle_and_wick() {
    let v = correlated_two_mode();
    let spec = lab_spec(CoefficientVector::<f64>::from_f64_pairs(&[(0.6, 0.0), (0.0, 0.8)]).unwrap());
    let (full, fd) = subtract_gaussian(&v, &spec, None, 14, 1e-4).unwrap();
    let s = SubtractedState::new(&v, &spec).unwrap();
    for k in 0..2 {
        let (red, rd) = reduced_mode_state(&v, Some(&spec), &e(2, k), internal_phase(k), 14, 1e-4).unwrap();
        let d = trace_distance(&red, &full.partial_trace(&[k]).unwrap()).unwrap();
        assert!(d < 1e-4, "mode {k}: {d}");
        assert!((rd.unwrap().trace - fd.trace).abs() < 1e-6);
        let (_, _, k_fock) = red.phase_averaged_kurtosis().unwrap();
        let k_wick = s.phase_averaged(&e(2, k)).unwrap().excess_kurtosis;
        assert!((k_fock - k_wick).abs() < 1e-4, "{k_fock} vs {k_wick}");
    }
    // a superposed measurement mode through the reduced path only
    let u = CoefficientVector::<f64>::from_f64_pairs(&[(0.3, 0.4), (-0.5, 0.7)]).unwrap();
    let (red, _) = reduced_mode_state(&v, Some(&spec), &u, Complex::new(1.0, 0.0), 20, 1e-4).unwrap();
    let (_, _, k_fock) = red.phase_averaged_kurtosis().unwrap();
    assert!((k_fock - s.phase_averaged(&u).unwrap().excess_kurtosis).abs() < 1e-6);
}

#[test]
fn basis_covariance_of_subtraction() {
    // subtracting EPR_0 and then looking at basis mode k equals looking at
    // the HG vector of EPR_k directly
    let v = diag(&[1.8, 0.6, 1.5, 0.7]);
    let epr = builtin_basis::<f64>(BasisName::Epr, 2).unwrap();
    let spec = ideal_spec(epr.mode(0).unwrap());
    let (rot, _) = subtract_gaussian(&v, &spec, Some(&epr), 14, 1e-4).unwrap();
    for k in 0..2 {
        let (red, _) = reduced_basis_mode(&v, Some(&spec), &epr, k, 14, 1e-4).unwrap();
        let d = trace_distance(&red, &rot.partial_trace(&[k]).unwrap()).unwrap();
        assert!(d < 1e-6, "{k}: {d}");
    }
}

#[test]
fn loss_channel_matches_gaussian_loss() {
    let v = diag(&[2.0, 0.5]);
    let g = gaussian_to_fock(&v, 30).unwrap().apply_loss(0.875).unwrap();
    let lv = crate::gaussian::apply_loss(&v, &[0.875]).unwrap();
    let h = gaussian_to_fock(&lv, 30).unwrap();
    assert!(trace_distance(&g, &h).unwrap() < 1e-8);
}

#[test]
fn wigner_values() {
    let vac = FockDensity::<f64>::number_state(5, 0).unwrap();
    assert!((wigner_point(&vac, 0.0, 0.0).unwrap() - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    let x = 0.7f64;
    let expected = (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI);
    assert!((wigner_point(&vac, x, 0.0).unwrap() - expected).abs() < 1e-15);
    let one = FockDensity::<f64>::number_state(5, 1).unwrap();
    assert!((2.0 * std::f64::consts::PI * wigner_point(&one, 0.0, 0.0).unwrap() + 1.0).abs() < 1e-14);
    let (sq1, _) = subtract_gaussian(&diag(&[2.0, 0.5]), &ideal_spec(e(1, 0)), None, 30, 1e-4).unwrap();
    let grid = wigner(&sq1, &GridSpec::auto(&sq1).unwrap()).unwrap();
    assert!((grid.w0 + 1.0).abs() < 1e-6);
    assert!((grid.w0 - sq1.parity_w0().unwrap()).abs() < 1e-4);
    assert!((grid.integral() - 1.0).abs() < 1e-3);
}

#[test]
fn wigner_orientation_matches_moments() {
    // ρ01 = i/2 gives ⟨x⟩ = 0 and ⟨p⟩ = -1
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [Complex::new(h, 0.0), Complex::new(0.0, -h), Complex::new(0.0, 0.0)];
    let r = FockDensity::from_pure(&[3], &psi).unwrap();
    let g = wigner(&r, &GridSpec::square(8.0, 161)).unwrap();
    let (mut mx, mut mp) = (0.0, 0.0);
    for (ix, x) in g.spec.xs().enumerate() {
        for (ip, p) in g.spec.ps().enumerate() {
            mx += x * g.value(ix, ip);
            mp += p * g.value(ix, ip);
        }
    }
    let a = g.spec.dx() * g.spec.dp();
    let p = LadderOp::p(1, 0);
    let x = LadderOp::x(1, 0);
    assert!((mx * a - r.expectation(&[x]).unwrap().re).abs() < 1e-6);
    assert!((mp * a - r.expectation(&[p]).unwrap().re).abs() < 1e-6);
}

#[test]
fn coarse_grid_rejected() {
    let vac = FockDensity::<f64>::number_state(5, 0).unwrap();
    assert!(matches!(wigner(&vac, &GridSpec::square(1.0, 11)), Err(Error::Grid(_))));
}

#[test]
fn marginal_by_integration() {
    let v = correlated_two_mode();
    let (r, _) = subtract_gaussian(&v, &ideal_spec(e(2, 0)), None, 10, 1e-3).unwrap();
    let red = r.partial_trace(&[1]).unwrap();
    let grid = GridSpec::square(8.0, 81);
    for &(x, p) in &[(0.0, 0.0), (0.7, -0.3), (-1.2, 1.5)] {
        let a = integrated_marginal(&r, 1, x, p, &grid).unwrap();
        let b = wigner_point(&red, x, p).unwrap();
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
    assert!(negativity_witness(&gaussian_to_fock(&v, 10).unwrap()).unwrap().is_none());
}

#[test]
fn binary_and_csv_round_trip() {
    let vac = FockDensity::<f64>::number_state(4, 0).unwrap();
    let g = wigner(&vac, &GridSpec::square(6.0, 61)).unwrap();
    let dir = std::env::temp_dir().join(format!("mpsub-wigner-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let h = dir.join("vac.json");
    g.write_binary(&h).unwrap();
    assert_eq!(WignerGrid::read_binary(&h).unwrap(), g);
    let c = dir.join("vac.csv");
    g.write_csv(&c).unwrap();
    let text = std::fs::read_to_string(&c).unwrap();
    assert!(text.starts_with("x,p,W\n"));
    assert_eq!(text.lines().count(), 61 * 61 + 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn single_precision_oracle() {
    let v = covariance_from_squeeze(&SqueezeSpec::<f32>::pure(&[1.8]).unwrap());
    let (r, _) = subtract_gaussian(&v, &ideal_spec(CoefficientVector::basis_vector(1, 0).unwrap()), None, 20, 1e-4).unwrap();
    assert!((r.parity_w0().unwrap() + 1.0).abs() < 1e-4);
}

