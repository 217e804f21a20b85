//! Single-mode reduced states after the channel without the full
//! multimode Fock space.
//!
//! Complete the measurement mode to a unitary so it becomes mode 0. Each
//! channel operator then reads `L = c_0 b_0 + |r| b_rest`, where `b_rest` is
//! the normalized remainder. Only the two-mode Gaussian marginal of
//! `(b_0, b_rest)` enters `tr_rest(L ρ L†)`, so every term costs one
//! two-mode Fock state whatever the number of modes.

use nalgebra::{Complex, DMatrix};

use super::{gaussian_to_fock_with, internal_terms, ChannelDiagnostics, FockDensity};
use crate::error::{Error, Result};
use crate::gaussian::{transform_passive, CovarianceMatrix};
use crate::linalg::complete_to_unitary;
use crate::mode_basis::{hg_to_internal, CoefficientVector, ModeTransform};
use crate::scalar::{lit, to_f64, Real};
use crate::subtraction::SubtractionSpec;
use crate::wick::HERALD_FLOOR;

/// Smallest cutoff used for the traced-out remainder mode.
pub const MIN_REST_CUTOFF: usize = 12;

/// Reduced state of HG mode vector `u`, Gaussian when `spec` is `None`.
///
/// `reference` fixes the quadrature phase of the measured mode: its
/// annihilator is `reference · Σ_k u_k conj(φ_k) b_k` in the internal frame.
/// Passing `internal_phase(k)` for the basis vector `e_k` reproduces the
/// marginal of mode `k`.
pub fn reduced_mode_state<T: Real>(
    v: &CovarianceMatrix<T>,
    spec: Option<&SubtractionSpec<T>>,
    u: &CoefficientVector<T>,
    reference: Complex<T>,
    cutoff: usize,
    leak_bound: f64,
) -> Result<(FockDensity<T>, Option<ChannelDiagnostics<T>>)> {
    let m = v.modes();
    if u.len() > m {
        return Err(Error::Dimension(format!("{}-mode measurement on a {m}-mode state", u.len())));
    }
    let mut cu: Vec<Complex<T>> = hg_to_internal(u.entries()).into_iter().map(|z| z * reference).collect();
    cu.resize(m, Complex::new(T::zero(), T::zero()));
    let w = complete_to_unitary(&cu);
    let vm = transform_passive(v, &w)?;

    let spec = match spec {
        None => {
            let g = gaussian_to_fock_with(&vm.marginal(&[0])?, &[cutoff], leak_bound)?;
            return Ok((g, None));
        }
        Some(s) => s,
    };

    let terms = internal_terms(spec, m, Some(&w))?;
    let mut acc = DMatrix::from_element(cutoff, cutoff, Complex::new(T::zero(), T::zero()));
    let mut total = T::zero();
    let mut leak = T::zero();
    let mut passthrough: Option<FockDensity<T>> = None;
    for (weight, op) in &terms {
        let term = match op {
            None => {
                if passthrough.is_none() {
                    passthrough = Some(gaussian_to_fock_with(&vm.marginal(&[0])?, &[cutoff], leak_bound)?);
                }
                passthrough.clone().expect("set above")
            }
            Some(c) => {
                let (t, l) = sandwiched_marginal(&vm, c, cutoff, leak_bound)?;
                leak = leak.max(l);
                t
            }
        };
        leak = leak.max(term.leak());
        total += *weight * term.trace();
        acc += term.matrix().scale(*weight);
    }
    if !(total > lit::<T>(HERALD_FLOOR)) {
        return Err(Error::Unheralded(to_f64(total)));
    }
    let mut out = FockDensity::new(&[cutoff], acc)?;
    out.normalize()?;
    Ok((
        out.with_leak(leak),
        Some(ChannelDiagnostics { trace: total, heralding_weight: total - spec.w0() }),
    ))
}

/// Reduced state of mode `k` of `basis`, with that mode's reference phase.
pub fn reduced_basis_mode<T: Real>(
    v: &CovarianceMatrix<T>,
    spec: Option<&SubtractionSpec<T>>,
    basis: &ModeTransform<T>,
    k: usize,
    cutoff: usize,
    leak_bound: f64,
) -> Result<(FockDensity<T>, Option<ChannelDiagnostics<T>>)> {
    let u = basis.mode(k)?;
    reduced_mode_state(v, spec, &u, basis.reference_phases()[k], cutoff, leak_bound)
}

/// Unnormalized `tr_rest(L ρ L†)` truncated to `cutoff`, and the fraction
/// lost to that truncation.
fn sandwiched_marginal<T: Real>(
    vm: &CovarianceMatrix<T>,
    c: &[Complex<T>],
    cutoff: usize,
    leak_bound: f64,
) -> Result<(FockDensity<T>, T)> {
    let m = vm.modes();
    let rest: Vec<Complex<T>> = c[1..].to_vec();
    let rn = rest.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
    let scale = c.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
    let big = if m == 1 || rn <= scale * lit::<T>(1e-14) {
        let g = gaussian_to_fock_with(&vm.marginal(&[0])?, &[cutoff + 1], leak_bound)?;
        g.sandwich(&c[..1])?
    } else {
        let w2 = complete_to_unitary(&rest);
        let mut b = DMatrix::identity(m, m);
        b.view_mut((1, 1), (m - 1, m - 1)).copy_from(&w2);
        let v2 = transform_passive(vm, &b)?;
        let rc = (cutoff + 1).max(MIN_REST_CUTOFF);
        let g = gaussian_to_fock_with(&v2.marginal(&[0, 1])?, &[cutoff + 1, rc], leak_bound)?;
        g.sandwich(&[c[0], Complex::new(rn, T::zero())])?.partial_trace(&[0])?
    };
    let before = big.trace();
    let small = big.truncate(&[cutoff])?;
    let lost = if before > T::zero() { (before - small.trace()) / before } else { T::zero() };
    Ok((small, lost.max(T::zero())))
}
