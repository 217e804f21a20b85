//! Fock matrix elements of a zero-mean Gaussian state.
//!
//! With `σ_Q` the covariance of `(a, a†)` in anti-normal order, the
//! Q-function is a Gaussian whose generating function gives
//!
//! ```text
//! ρ_{k+e_i} √(k_i+1) = Σ_j A_ij √k_j ρ_{k-e_j},   ρ_0 = det(σ_Q)^{-1/2}
//! A = (I - σ_Q⁻¹) X,   X = [[0, I], [I, 0]]
//! ```
//!
//! over the joint multi-index `k = (m, n)` of ket and bra occupations. This
//! is exact up to the cutoff and needs no decomposition of the covariance.

use nalgebra::{Complex, DMatrix};

use super::{FockDensity, Layout};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::scalar::{lit, to_f64, Real};

/// Largest acceptable probability outside the cutoff.
pub const DEFAULT_LEAK_BOUND: f64 = 1e-4;

/// Same cutoff in every mode, default leak bound.
pub fn gaussian_to_fock<T: Real>(v: &CovarianceMatrix<T>, cutoff: usize) -> Result<FockDensity<T>> {
    gaussian_to_fock_with(v, &vec![cutoff; v.modes()], DEFAULT_LEAK_BOUND)
}

/// Builds the truncated state, records the leak and renormalizes. Fails if
/// the leak exceeds `leak_bound`.
pub fn gaussian_to_fock_with<T: Real>(
    v: &CovarianceMatrix<T>,
    dims: &[usize],
    leak_bound: f64,
) -> Result<FockDensity<T>> {
    let m = v.modes();
    if dims.len() != m {
        return Err(Error::Dimension(format!("{} cutoffs for {m} modes", dims.len())));
    }
    let a = recurrence_matrix(v)?;
    let sq_det = anti_normal_covariance(v).determinant();
    let pref = Complex::new(T::one() / sq_det.re.sqrt(), T::zero());

    let mut all = dims.to_vec();
    all.extend_from_slice(dims);
    let layout = Layout::new(&all)?;
    let total = layout.total();
    let nz: Vec<Vec<(usize, Complex<T>)>> = (0..2 * m)
        .map(|i| {
            (0..2 * m)
                .filter(|&j| a[(i, j)].norm_sqr() > T::zero())
                .map(|j| (j, a[(i, j)]))
                .collect()
        })
        .collect();
    let maxd = *dims.iter().max().unwrap_or(&1);
    let sq: Vec<T> = (0..=maxd).map(|k| lit::<T>(k as f64).sqrt()).collect();

    let mut rho = vec![Complex::new(T::zero(), T::zero()); total];
    rho[0] = pref;
    let mut digits = vec![0usize; 2 * m];
    for flat in 1..total {
        // odometer, last digit fastest
        let mut p = 2 * m - 1;
        loop {
            digits[p] += 1;
            if digits[p] < all[p] {
                break;
            }
            digits[p] = 0;
            p -= 1;
        }
        let i = digits.iter().position(|&d| d > 0).expect("nonzero multi-index");
        let base = flat - layout.stride(i);
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(j, aij) in &nz[i] {
            let kj = if j == i { digits[j] - 1 } else { digits[j] };
            if kj == 0 {
                continue;
            }
            acc += aij * rho[base - layout.stride(j)] * sq[kj];
        }
        rho[flat] = acc.unscale(sq[digits[i]]);
    }

    let d: usize = dims.iter().product();
    let matrix = DMatrix::from_fn(d, d, |r, c| rho[r * d + c]);
    drop(rho);
    let mut state = FockDensity::new(dims, matrix)?;
    let kept = state.normalize()?;
    let leak = T::one() - kept;
    if to_f64(leak) > leak_bound {
        return Err(Error::Truncation { leak: to_f64(leak), bound: leak_bound });
    }
    Ok(state.with_leak(leak.max(T::zero())))
}

/// `σ + I/2` for `σ` the symmetrized covariance of `(a, a†)`.
fn anti_normal_covariance<T: Real>(v: &CovarianceMatrix<T>) -> DMatrix<Complex<T>> {
    let m = v.modes();
    let half = lit::<T>(0.5);
    let mut t = DMatrix::from_element(2 * m, 2 * m, Complex::new(T::zero(), T::zero()));
    for j in 0..m {
        t[(j, 2 * j)] = Complex::new(half, T::zero());
        t[(j, 2 * j + 1)] = Complex::new(T::zero(), half);
        t[(m + j, 2 * j)] = Complex::new(half, T::zero());
        t[(m + j, 2 * j + 1)] = Complex::new(T::zero(), -half);
    }
    let vc = v.matrix().map(|x| Complex::new(x, T::zero()));
    let sigma = &t * vc * t.adjoint();
    sigma + DMatrix::identity(2 * m, 2 * m).scale(half)
}

fn recurrence_matrix<T: Real>(v: &CovarianceMatrix<T>) -> Result<DMatrix<Complex<T>>> {
    let m = v.modes();
    let q = anti_normal_covariance(v);
    let inv = q
        .try_inverse()
        .ok_or_else(|| Error::Unphysical("singular Q-function covariance".into()))?;
    let b = DMatrix::identity(2 * m, 2 * m) - inv;
    // right-multiplying by X swaps the two column halves
    Ok(DMatrix::from_fn(2 * m, 2 * m, |i, j| b[(i, (j + m) % (2 * m))]))
}
