//! Small dense linear-algebra helpers shared by the state modules.

use nalgebra::{Complex, DMatrix};

use crate::scalar::{cabs, lit, Real};

/// Largest entry of `|W W† - I|`.
pub fn unitarity_deviation<T: Real>(w: &DMatrix<Complex<T>>) -> T {
    let n = w.nrows();
    let prod = w * w.adjoint();
    let mut dev = T::zero();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { T::one() } else { T::zero() };
            let d = cabs(prod[(i, j)] - Complex::new(target, T::zero()));
            if d > dev {
                dev = d;
            }
        }
    }
    dev
}

/// Nearest unitary in Frobenius norm (unitary factor of the polar decomposition).
pub fn polar_unitary<T: Real>(u: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let svd = u.clone().svd(true, true);
    let left = svd.u.expect("svd computed with u");
    let right = svd.v_t.expect("svd computed with v_t");
    left * right
}

fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * *y)
}

fn vnorm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Unitary whose first row is the normalized `first_row`.
///
/// Remaining rows come from Gram-Schmidt on the standard basis, always taking
/// the candidate with the largest residual (ties broken by index), so the
/// completion is deterministic.
pub fn complete_to_unitary<T: Real>(first_row: &[Complex<T>]) -> DMatrix<Complex<T>> {
    let n = first_row.len();
    let norm = vnorm(first_row);
    let mut rows: Vec<Vec<Complex<T>>> = vec![first_row.iter().map(|z| z.unscale(norm)).collect()];
    let mut used = vec![false; n];
    while rows.len() < n {
        let mut best: Option<(usize, T, Vec<Complex<T>>)> = None;
        for (j, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut cand = vec![Complex::new(T::zero(), T::zero()); n];
            cand[j] = Complex::new(T::one(), T::zero());
            // two passes of classical Gram-Schmidt
            for _ in 0..2 {
                for r in &rows {
                    let proj = inner(r, &cand);
                    for (c, rv) in cand.iter_mut().zip(r) {
                        *c -= *rv * proj;
                    }
                }
            }
            let res = vnorm(&cand);
            if best.as_ref().map_or(true, |(_, b, _)| res > *b) {
                best = Some((j, res, cand));
            }
        }
        let (j, res, cand) = best.expect("candidate available while rows < n");
        used[j] = true;
        rows.push(cand.into_iter().map(|z| z.unscale(res)).collect());
    }
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Negative eigenvalues (numerical noise) are clamped to zero.
pub fn hermitian_sqrt<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for k in 0..n {
        let s = eig.eigenvalues[k].max(T::zero()).sqrt();
        for i in 0..n {
            scaled[(i, k)] = scaled[(i, k)].scale(s);
        }
    }
    scaled * eig.eigenvectors.adjoint()
}

pub fn min_hermitian_eigenvalue<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .copied()
        .fold(T::max_value().unwrap_or(lit(f64::MAX)), |a, b| a.min(b))
}

/// Symplectic form for interleaved ordering `(x0, p0, x1, p1, ...)`.
pub fn symplectic_form<T: Real>(modes: usize) -> nalgebra::DMatrix<T> {
    let mut om = nalgebra::DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        om[(2 * k, 2 * k + 1)] = T::one();
        om[(2 * k + 1, 2 * k)] = -T::one();
    }
    om
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn completion_is_unitary_with_requested_first_row() {
        let u: Vec<Complex<f64>> = vec![cplx(0.5, 0.0), cplx(0.0, -0.5), cplx(0.5, 0.5), cplx(0.0, 0.0)];
        let w = complete_to_unitary(&u);
        assert!(unitarity_deviation(&w) < 1e-12);
        let norm = vnorm(&u);
        for j in 0..4 {
            assert!(cabs(w[(0, j)] - u[j].unscale(norm)) < 1e-14);
        }
    }

    #[test]
    fn completion_of_basis_vector_is_permutation_like() {
        let u: Vec<Complex<f64>> = vec![cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(0.0, 0.0)];
        let w = complete_to_unitary(&u);
        assert!(unitarity_deviation(&w) < 1e-14);
        assert_eq!(w[(1, 0)], cplx(1.0, 0.0));
    }

    #[test]
    fn polar_projection_fixes_unitary() {
        let m = DMatrix::from_row_slice(2, 2, &[cplx::<f64>(0.0, 1.0), cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(-1.0, 0.0)]);
        let p = polar_unitary(&m);
        assert!((p - m).norm() < 1e-12);
    }
}
