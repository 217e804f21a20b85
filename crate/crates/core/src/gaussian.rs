//! Zero-mean multimode Gaussian states.
//!
//! Quadratures are `x = a + a†`, `p = (a - a†)/i`, so the vacuum covariance is
//! the identity. Ordering is interleaved, `(x0, p0, x1, p1, ...)`, and the
//! matrix is expressed in the internal mode frame of [`crate::mode_basis`].

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_hermitian_eigenvalue, symplectic_form};
use crate::mode_basis::ModeTransform;
use crate::scalar::{lit, to_f64, tol, Real};

pub const ORDERING_TAG: &str = "xpxp";

/// Largest eigenvalue violation of `V + iΩ ⪰ 0` that is still accepted.
pub const UNCERTAINTY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<T: Real> {
    matrix: DMatrix<T>,
}

impl<T: Real> CovarianceMatrix<T> {
    /// Checks shape, symmetry (1e-10) and the uncertainty relation.
    pub fn new(matrix: DMatrix<T>) -> Result<Self> {
        let v = Self::new_unchecked(matrix)?;
        let report = v.validate();
        if report.symmetry_deviation > tol::<T>(1e-10) {
            return Err(Error::Unphysical(format!(
                "covariance is not symmetric (deviation {:.3e})",
                to_f64(report.symmetry_deviation)
            )));
        }
        if !report.physical {
            return Err(Error::Unphysical(format!(
                "V + iΩ has eigenvalue {:.3e}",
                to_f64(report.min_uncertainty_eigenvalue)
            )));
        }
        Ok(v)
    }

    /// Only checks the shape. Use [`Self::validate`] for a diagnosis.
    pub fn new_unchecked(matrix: DMatrix<T>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n % 2 != 0 || matrix.ncols() != n {
            return Err(Error::Dimension(format!(
                "covariance must be 2N x 2N with N >= 1, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn vacuum(modes: usize) -> Result<Self> {
        Self::new_unchecked(DMatrix::identity(2 * modes, 2 * modes))
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn var_x(&self, k: usize) -> T {
        self.matrix[(2 * k, 2 * k)]
    }

    pub fn var_p(&self, k: usize) -> T {
        self.matrix[(2 * k + 1, 2 * k + 1)]
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k >= self.modes() {
            return Err(Error::Dimension(format!(
                "mode {k} out of range for {} modes",
                self.modes()
            )));
        }
        Ok(())
    }

    /// Covariance of the listed modes, in the listed order.
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Dimension("marginal over no modes".into()));
        }
        for &k in keep {
            self.check_mode(k)?;
        }
        let idx: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        Ok(Self {
            matrix: DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]),
        })
    }

    pub fn validate(&self) -> ValidationReport<T> {
        let n = self.matrix.nrows();
        let mut sym = T::zero();
        for i in 0..n {
            for j in 0..i {
                sym = sym.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        let om = symplectic_form::<T>(self.modes());
        let h = DMatrix::from_fn(n, n, |i, j| {
            // symmetrize first so the eigen-solver sees a Hermitian matrix
            let s = (self.matrix[(i, j)] + self.matrix[(j, i)]) * lit(0.5);
            Complex::new(s, om[(i, j)])
        });
        let min_eig = min_hermitian_eigenvalue(&h);
        let mode_purities = (0..self.modes())
            .map(|k| block_purity(&self.matrix, k))
            .collect();
        let diag_blocks = (0..self.modes()).all(|j| {
            (0..self.modes()).all(|k| {
                j == k
                    || (0..2).all(|a| {
                        (0..2).all(|b| self.matrix[(2 * j + a, 2 * k + b)].abs() <= tol::<T>(1e-12))
                    })
            })
        });
        ValidationReport {
            symmetry_deviation: sym,
            min_uncertainty_eigenvalue: min_eig,
            physical: sym <= tol::<T>(1e-10) && min_eig >= -tol::<T>(UNCERTAINTY_TOL),
            mode_purities,
            block_diagonal: diag_blocks,
        }
    }

    /// Global purity `1/√det V`.
    pub fn purity(&self) -> T {
        T::one() / self.matrix.determinant().sqrt()
    }

    /// Purity of the reduced state of mode `k`.
    pub fn mode_purity(&self, k: usize) -> Result<T> {
        self.check_mode(k)?;
        Ok(block_purity(&self.matrix, k))
    }

    /// Symplectic eigenvalues in ascending order (all 1 for a pure state).
    pub fn symplectic_eigenvalues(&self) -> Vec<T> {
        let n = self.matrix.nrows();
        let eig = self.matrix.clone().symmetric_eigen();
        let mut half = eig.eigenvectors.clone();
        for k in 0..n {
            let s = eig.eigenvalues[k].max(T::zero()).sqrt();
            for i in 0..n {
                half[(i, k)] *= s;
            }
        }
        let root = &half * eig.eigenvectors.transpose();
        let a = &root * symplectic_form::<T>(self.modes()) * &root;
        // i·A is Hermitian with eigenvalues ±ν
        let h = DMatrix::from_fn(n, n, |i, j| Complex::new(T::zero(), a[(i, j)]));
        let e = h.symmetric_eigen();
        let mut nu: Vec<T> = e.eigenvalues.iter().copied().filter(|v| *v > T::zero()).collect();
        nu.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalue"));
        nu.truncate(self.modes());
        nu
    }

    pub fn to_json(&self) -> CovarianceJson {
        CovarianceJson {
            ordering: ORDERING_TAG.into(),
            matrix: (0..self.matrix.nrows())
                .map(|i| (0..self.matrix.ncols()).map(|j| to_f64(self.matrix[(i, j)])).collect())
                .collect(),
        }
    }

    pub fn from_json(json: &CovarianceJson) -> Result<Self> {
        if json.ordering != ORDERING_TAG {
            return Err(Error::Format(format!(
                "unsupported quadrature ordering `{}` (expected `{ORDERING_TAG}`)",
                json.ordering
            )));
        }
        let n = json.matrix.len();
        if json.matrix.iter().any(|row| row.len() != n) {
            return Err(Error::Format("covariance matrix rows have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| lit(json.matrix[i][j])))
    }
}

fn block_purity<T: Real>(m: &DMatrix<T>, k: usize) -> T {
    let (a, b, c) = (m[(2 * k, 2 * k)], m[(2 * k, 2 * k + 1)], m[(2 * k + 1, 2 * k + 1)]);
    T::one() / (a * c - b * b).sqrt()
}

/// Serialized form: an ordering tag plus a row-major array of arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceJson {
    pub ordering: String,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<T: Real> {
    pub symmetry_deviation: T,
    pub min_uncertainty_eigenvalue: T,
    pub physical: bool,
    /// `1/√det` of each 2x2 diagonal block.
    pub mode_purities: Vec<T>,
    /// True when all inter-mode blocks vanish, so the mode purities are exact
    /// factor purities.
    pub block_diagonal: bool,
}

/// Per-mode quadrature variances in dB, `variance = 10^(dB/10)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeSpec<T: Real> {
    modes: Vec<(T, T)>,
}

impl<T: Real> SqueezeSpec<T> {
    /// Rejects modes with `x_dB + p_dB < 0` (below the uncertainty bound).
    pub fn new(modes: Vec<(T, T)>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("squeeze spec has no modes".into()));
        }
        for (k, &(x, p)) in modes.iter().enumerate() {
            if !x.is_finite() || !p.is_finite() {
                return Err(Error::InvalidParameter(format!("mode {k}: non-finite dB value")));
            }
            if x + p < -tol::<T>(1e-9) {
                return Err(Error::Unphysical(format!(
                    "mode {k}: ({}, {}) dB violates the uncertainty relation",
                    x, p
                )));
            }
        }
        Ok(Self { modes })
    }

    pub fn from_f64(modes: &[(f64, f64)]) -> Result<Self> {
        Self::new(modes.iter().map(|&(x, p)| (lit(x), lit(p))).collect())
    }

    /// Measured input variances of the four HG modes.
    pub fn measured_hg() -> Self {
        Self::from_f64(&[(2.8, -1.8), (2.1, -1.6), (1.6, -1.0), (1.4, -0.7)])
            .expect("preset is physical")
    }

    /// Pure p-squeezed vacuum with `db` of squeezing in every listed mode.
    pub fn pure(dbs: &[f64]) -> Result<Self> {
        Self::from_f64(&dbs.iter().map(|&d| (d, -d)).collect::<Vec<_>>())
    }

    pub fn modes(&self) -> &[(T, T)] {
        &self.modes
    }
}

pub fn db_to_variance<T: Real>(db: T) -> T {
    lit::<T>(10.0).powf(db / lit(10.0))
}

pub fn covariance_from_squeeze<T: Real>(spec: &SqueezeSpec<T>) -> CovarianceMatrix<T> {
    let n = spec.modes.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (k, &(x, p)) in spec.modes.iter().enumerate() {
        m[(2 * k, 2 * k)] = db_to_variance(x);
        m[(2 * k + 1, 2 * k + 1)] = db_to_variance(p);
    }
    CovarianceMatrix { matrix: m }
}

/// Real 2N x 2N symplectic orthogonal matrix of a mode transform.
pub fn quadrature_transform<T: Real>(u: &ModeTransform<T>) -> DMatrix<T> {
    symplectic_from_operator(&u.internal_operator_matrix())
}

/// `S` with blocks `[[Re W, -Im W], [Im W, Re W]]` for `b' = W b`.
pub fn symplectic_from_operator<T: Real>(w: &DMatrix<Complex<T>>) -> DMatrix<T> {
    let n = w.nrows();
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        for j in 0..n {
            let z = w[(k, j)];
            s[(2 * k, 2 * j)] = z.re;
            s[(2 * k, 2 * j + 1)] = -z.im;
            s[(2 * k + 1, 2 * j)] = z.im;
            s[(2 * k + 1, 2 * j + 1)] = z.re;
        }
    }
    s
}

/// Covariance seen in the modes of `u`: `V' = S V Sᵀ`.
pub fn change_basis<T: Real>(v: &CovarianceMatrix<T>, u: &ModeTransform<T>) -> Result<CovarianceMatrix<T>> {
    if u.dim() != v.modes() {
        return Err(Error::Dimension(format!(
            "{}-mode basis {} applied to a {}-mode state",
            u.dim(),
            u.label(),
            v.modes()
        )));
    }
    transform_passive(v, &u.internal_operator_matrix())
}

/// Covariance after the passive map `b' = W b` between internal frames.
pub fn transform_passive<T: Real>(v: &CovarianceMatrix<T>, w: &DMatrix<Complex<T>>) -> Result<CovarianceMatrix<T>> {
    if w.nrows() != v.modes() || w.ncols() != v.modes() {
        return Err(Error::Dimension(format!(
            "{}x{} operator matrix on a {}-mode state",
            w.nrows(),
            w.ncols(),
            v.modes()
        )));
    }
    let dev = crate::linalg::unitarity_deviation(w);
    if dev > tol::<T>(1e-10) {
        return Err(Error::NotUnitary { deviation: to_f64(dev) });
    }
    let s = symplectic_from_operator(w);
    let out = &s * &v.matrix * s.transpose();
    // restore exact symmetry lost to rounding
    let sym = (&out + out.transpose()) * lit::<T>(0.5);
    Ok(CovarianceMatrix { matrix: sym })
}

/// Per-mode loss: `ηV + (1-η)I` on diagonal blocks, `√(η_j η_k)` on cross blocks.
pub fn apply_loss<T: Real>(v: &CovarianceMatrix<T>, eta: &[T]) -> Result<CovarianceMatrix<T>> {
    if eta.len() != v.modes() {
        return Err(Error::Dimension(format!(
            "{} efficiencies for {} modes",
            eta.len(),
            v.modes()
        )));
    }
    for &e in eta {
        if !(e > T::zero() && e <= T::one()) {
            return Err(Error::InvalidParameter(format!("efficiency {e} outside (0, 1]")));
        }
    }
    let n = v.matrix.nrows();
    let d: Vec<T> = (0..n).map(|i| eta[i / 2].sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let base = v.matrix[(i, j)] * d[i] * d[j];
        if i == j {
            base + (T::one() - eta[i / 2])
        } else {
            base
        }
    });
    Ok(CovarianceMatrix { matrix: m })
}

/// `Δ²(x_i - x_j) + Δ²(p_i + p_j)`; below 4 witnesses entanglement.
pub fn duan_value<T: Real>(v: &CovarianceMatrix<T>, i: usize, j: usize) -> Result<T> {
    v.check_mode(i)?;
    v.check_mode(j)?;
    if i == j {
        return Err(Error::InvalidParameter("Duan criterion needs two distinct modes".into()));
    }
    let m = &v.matrix;
    let two = lit::<T>(2.0);
    let dx = m[(2 * i, 2 * i)] + m[(2 * j, 2 * j)] - two * m[(2 * i, 2 * j)];
    let dp = m[(2 * i + 1, 2 * i + 1)] + m[(2 * j + 1, 2 * j + 1)] + two * m[(2 * i + 1, 2 * j + 1)];
    Ok(dx + dp)
}

/// Product of the conditional variances of mode `conditioned` given mode
/// `conditioning`, each with its optimal real gain. Below 1 witnesses
/// EPR steering.
pub fn epr_value<T: Real>(v: &CovarianceMatrix<T>, conditioned: usize, conditioning: usize) -> Result<T> {
    v.check_mode(conditioned)?;
    v.check_mode(conditioning)?;
    if conditioned == conditioning {
        return Err(Error::InvalidParameter("EPR criterion needs two distinct modes".into()));
    }
    let m = &v.matrix;
    let cond = |a: usize, b: usize| -> Result<T> {
        let vb = m[(b, b)];
        if !(vb > tol::<T>(1e-300)) {
            return Err(Error::InvalidParameter("conditioning variance vanishes".into()));
        }
        Ok(m[(a, a)] - m[(a, b)] * m[(a, b)] / vb)
    };
    let (i, j) = (conditioned, conditioning);
    Ok(cond(2 * i, 2 * j)? * cond(2 * i + 1, 2 * j + 1)?)
}

/// Symmetric 0/1 graph with empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    edges: Vec<bool>,
}

impl Adjacency {
    pub fn new(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut edges = vec![false; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension("adjacency matrix is not square".into()));
            }
            for (j, &a) in row.iter().enumerate() {
                if a > 1 {
                    return Err(Error::InvalidParameter("adjacency entries must be 0 or 1".into()));
                }
                edges[i * n + j] = a == 1;
            }
        }
        for i in 0..n {
            if edges[i * n + i] {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {i}")));
            }
            for j in 0..i {
                if edges[i * n + j] != edges[j * n + i] {
                    return Err(Error::InvalidParameter("adjacency matrix is not symmetric".into()));
                }
            }
        }
        Ok(Self { n, edges })
    }

    /// Path graph 0-1-...-(n-1).
    pub fn chain(n: usize) -> Self {
        let mut edges = vec![false; n * n];
        for i in 1..n {
            edges[i * n + i - 1] = true;
            edges[(i - 1) * n + i] = true;
        }
        Self { n, edges }
    }

    /// Cycle graph 0-1-...-(n-1)-0.
    pub fn ring(n: usize) -> Self {
        let mut a = Self::chain(n);
        if n > 2 {
            a.edges[n - 1] = true;
            a.edges[(n - 1) * n] = true;
        }
        a
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.edges[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.connected(i, j)).count()
    }
}

/// `Δ²(x_k - Σ_l A_kl p_l)` divided by its vacuum value `1 + deg(k)`.
pub fn nullifier_variances<T: Real>(v: &CovarianceMatrix<T>, adjacency: &Adjacency) -> Result<Vec<T>> {
    if adjacency.len() != v.modes() {
        return Err(Error::Dimension(format!(
            "{}-vertex graph for a {}-mode state",
            adjacency.len(),
            v.modes()
        )));
    }
    let m = &v.matrix;
    let n = v.modes();
    let two = lit::<T>(2.0);
    Ok((0..n)
        .map(|k| {
            let nb: Vec<usize> = (0..n).filter(|&l| adjacency.connected(k, l)).collect();
            let mut var = m[(2 * k, 2 * k)];
            for &l in &nb {
                var -= two * m[(2 * k, 2 * l + 1)];
                for &q in &nb {
                    var += m[(2 * l + 1, 2 * q + 1)];
                }
            }
            var / lit::<T>((1 + nb.len()) as f64)
        })
        .collect())
}
