//! Mode bases over the Hermite-Gaussian reference basis.
//!
//! # Conventions
//!
//! A [`CoefficientVector`] `c` names the mode `f = Σ c_k HG_k`; its
//! annihilation operator is `a_f = Σ c_k a_k` (coefficients enter linearly, as
//! in `Â = Σ c_k â_k`).
//!
//! Covariance matrices and the Fock oracle work in the *internal* basis
//! `e_k = HG_k` for even `k` and `e_k = i·HG_k` for odd `k`. The odd HG modes
//! of the source are x-squeezed, so in the internal basis every default
//! squeezed vacuum is p-squeezed. The internal operators are `b_k = a_k` (even)
//! and `b_k = i·a_k` (odd), hence `a_f = Σ c_k conj(φ_k) b_k` with
//! `φ_k = i^(k mod 2)`; see [`hg_to_internal`].
//!
//! A [`ModeTransform`] stores its matrix row-wise: row `k` holds the HG
//! coefficients of new mode `k`. Each new mode also carries a reference phase
//! `r_k` fixing which of its quadratures is called `x`: its internal operator
//! is `b'_k = r_k a'_k`. The default follows the odd-index rule above, so the
//! identity transform leaves a covariance unchanged. The printed cluster-state
//! matrices are kept as printed (after a polar cleanup) with `r_k = i`; with it
//! the cluster nullifiers take the form `x_k - Σ_l A_kl p_l`. Reference phases
//! only rotate quadrature frames and are invisible to phase-averaged
//! observables.
//!
//! EPR modes use the linear convention with `r_k = 1`:
//! `EPR_0 = (HG_0 + HG_1)/√2`, `EPR_1 = (HG_0 - HG_1)/√2`. Change the frame
//! through [`ModeTransform::with_reference_phases`] if a different LO
//! reference is needed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{polar_unitary, unitarity_deviation};
use crate::scalar::{cabs, cplx, lit, to_f64, tol, Real};

/// Normalized complex mode coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<T: Real> {
    entries: Vec<Complex<T>>,
}

impl<T: Real> CoefficientVector<T> {
    /// Normalizes `entries`; fails on an empty or zero vector.
    pub fn new(entries: Vec<Complex<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("coefficient vector is empty".into()));
        }
        let norm = entries.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
        if !(norm > tol::<T>(1e-300)) || !norm.is_finite() {
            return Err(Error::InvalidParameter("coefficient vector has zero norm".into()));
        }
        Ok(Self {
            entries: entries.into_iter().map(|z| z.unscale(norm)).collect(),
        })
    }

    pub fn from_f64_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(re, im)| cplx(re, im)).collect())
    }

    /// Unit vector selecting mode `k` of `n`.
    pub fn basis_vector(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::Dimension(format!("mode {k} out of range for {n} modes")));
        }
        let mut e = vec![Complex::new(T::zero(), T::zero()); n];
        e[k] = Complex::new(T::one(), T::zero());
        Ok(Self { entries: e })
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> T {
        self.entries.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt()
    }

    /// Pads with zeros up to `n` modes.
    pub fn embed(&self, n: usize) -> Result<Self> {
        if n < self.len() {
            return Err(Error::Dimension(format!(
                "cannot embed a {}-mode vector into {n} modes",
                self.len()
            )));
        }
        let mut e = self.entries.clone();
        e.resize(n, Complex::new(T::zero(), T::zero()));
        Ok(Self { entries: e })
    }

    /// `|⟨self, other⟩|²`, the mode overlap.
    pub fn overlap(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * *b)
            .norm_sqr()
    }
}

/// Internal-basis coefficients of the operator `a_f` for the HG mode vector `c`.
pub fn hg_to_internal<T: Real>(c: &[Complex<T>]) -> Vec<Complex<T>> {
    c.iter()
        .enumerate()
        .map(|(k, z)| *z * internal_phase::<T>(k).conj())
        .collect()
}

/// Inverse of [`hg_to_internal`].
pub fn internal_to_hg<T: Real>(c: &[Complex<T>]) -> Vec<Complex<T>> {
    c.iter()
        .enumerate()
        .map(|(k, z)| *z * internal_phase::<T>(k))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisName {
    Hg,
    Epr,
    Lc,
    Sc,
}

impl BasisName {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisName::Hg => "HG",
            BasisName::Epr => "EPR",
            BasisName::Lc => "LC",
            BasisName::Sc => "SC",
        }
    }
}

impl fmt::Display for BasisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BasisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HG" => Ok(BasisName::Hg),
            "EPR" => Ok(BasisName::Epr),
            "LC" => Ok(BasisName::Lc),
            "SC" => Ok(BasisName::Sc),
            _ => Err(Error::InvalidParameter(format!(
                "unknown basis `{s}` (expected HG, EPR, LC or SC)"
            ))),
        }
    }
}

/// Printed linear-cluster basis (rows: LC_k over HG_0..HG_3).
pub const LC_PRINTED: [[(f64, f64); 4]; 4] = [
    [(0.0, -0.344), (0.0, -0.421), (0.0, 0.531), (0.0, 0.650)],
    [(0.344, 0.0), (-0.765, 0.0), (-0.531, 0.0), (0.119, 0.0)],
    [(0.0, -0.765), (0.0, -0.344), (0.0, -0.119), (0.0, -0.531)],
    [(0.421, 0.0), (-0.344, 0.0), (0.650, 0.0), (-0.531, 0.0)],
];

/// Printed square-cluster basis (rows: SC_k over HG_0..HG_3).
pub const SC_PRINTED: [[(f64, f64); 4]; 4] = [
    [(-0.316, 0.0), (0.632, 0.0), (0.707, 0.0), (0.0, 0.0)],
    [(0.0, 0.632), (0.0, 0.316), (0.0, 0.0), (0.0, -0.707)],
    [(-0.316, 0.0), (0.632, 0.0), (-0.707, 0.0), (0.0, 0.0)],
    [(0.0, 0.632), (0.0, 0.316), (0.0, 0.0), (0.0, 0.707)],
];

/// A unitary change of mode basis over the HG reference basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform<T: Real> {
    matrix: DMatrix<Complex<T>>,
    label: String,
    reference_phases: Vec<Complex<T>>,
}

/// `i^(k mod 2)`, the internal frame phase of HG mode `k`.
pub fn internal_phase<T: Real>(k: usize) -> Complex<T> {
    if k % 2 == 1 {
        Complex::new(T::zero(), T::one())
    } else {
        Complex::new(T::one(), T::zero())
    }
}

impl<T: Real> ModeTransform<T> {
    /// Wraps a unitary; rejects deviations above 1e-10.
    pub fn new(matrix: DMatrix<Complex<T>>, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "mode transform must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = unitarity_deviation(&matrix);
        if dev > tol::<T>(1e-10) {
            return Err(Error::NotUnitary { deviation: to_f64(dev) });
        }
        let reference_phases = (0..matrix.nrows()).map(internal_phase).collect();
        Ok(Self {
            matrix,
            label: label.into(),
            reference_phases,
        })
    }

    /// Projects a nearly-unitary matrix (e.g. one rounded for print) onto the
    /// closest unitary and wraps it. Fails if the input is far from unitary.
    pub fn from_rounded(matrix: DMatrix<Complex<T>>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let dev = unitarity_deviation(&matrix);
        if dev > lit(0.05) {
            return Err(Error::NotUnitary { deviation: to_f64(dev) });
        }
        let projected = polar_unitary(&matrix);
        let shift = (&projected - &matrix)
            .iter()
            .fold(T::zero(), |a, z| a.max(cabs(*z)));
        log::debug!(
            "{label}: polar projection moved entries by up to {:.3e} (input deviation {:.3e})",
            to_f64(shift),
            to_f64(dev)
        );
        Self::new(projected, label)
    }

    pub fn identity(n: usize, label: impl Into<String>) -> Result<Self> {
        Self::new(DMatrix::identity(n, n), label)
    }

    pub fn with_reference_phases(mut self, phases: Vec<Complex<T>>) -> Result<Self> {
        if phases.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} reference phases for a {}-mode basis",
                phases.len(),
                self.dim()
            )));
        }
        if phases.iter().any(|z| (cabs(*z) - T::one()).abs() > tol::<T>(1e-12)) {
            return Err(Error::InvalidParameter("reference phases must have unit modulus".into()));
        }
        self.reference_phases = phases;
        Ok(self)
    }

    /// Same reference phase for every new mode.
    pub fn with_uniform_phase(self, phase: Complex<T>) -> Result<Self> {
        let n = self.dim();
        self.with_reference_phases(vec![phase; n])
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn reference_phases(&self) -> &[Complex<T>] {
        &self.reference_phases
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// HG coefficients of new mode `k`.
    pub fn mode(&self, k: usize) -> Result<CoefficientVector<T>> {
        if k >= self.dim() {
            return Err(Error::Dimension(format!(
                "mode {k} out of range for {}-mode basis {}",
                self.dim(),
                self.label
            )));
        }
        CoefficientVector::new(self.matrix.row(k).iter().copied().collect())
    }

    pub fn mode_label(&self, k: usize) -> String {
        format!("{}{k}", self.label)
    }

    /// Direct sum with the identity up to `n` modes.
    pub fn embed(&self, n: usize) -> Result<Self> {
        let d = self.dim();
        if n < d {
            return Err(Error::Dimension(format!("cannot embed a {d}-mode basis into {n} modes")));
        }
        let mut m = DMatrix::identity(n, n);
        m.view_mut((0, 0), (d, d)).copy_from(&self.matrix);
        let mut reference_phases = self.reference_phases.clone();
        reference_phases.extend((d..n).map(internal_phase));
        Ok(Self {
            matrix: m,
            label: self.label.clone(),
            reference_phases,
        })
    }

    /// Operator matrix between internal frames: `b'_k = Σ_j W_kj b_j`,
    /// `W_kj = r_k U_kj conj(φ_j)`.
    pub fn internal_operator_matrix(&self) -> DMatrix<Complex<T>> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |k, j| {
            self.reference_phases[k] * self.matrix[(k, j)] * internal_phase::<T>(j).conj()
        })
    }
}

/// One of the named bases. HG is the identity for any `n`; EPR needs `n = 2`;
/// LC and SC need `n = 4`.
pub fn builtin_basis<T: Real>(name: BasisName, n: usize) -> Result<ModeTransform<T>> {
    let unsupported = || Error::UnsupportedBasis { name: name.to_string(), modes: n };
    match name {
        BasisName::Hg => {
            if n == 0 {
                return Err(unsupported());
            }
            ModeTransform::identity(n, "HG")
        }
        BasisName::Epr => {
            if n != 2 {
                return Err(unsupported());
            }
            let s = lit::<T>(0.5).sqrt();
            let m = DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex::new(s, T::zero()),
                    Complex::new(s, T::zero()),
                    Complex::new(s, T::zero()),
                    Complex::new(-s, T::zero()),
                ],
            );
            ModeTransform::new(m, "EPR")?.with_uniform_phase(Complex::new(T::one(), T::zero()))
        }
        BasisName::Lc | BasisName::Sc => {
            if n != 4 {
                return Err(unsupported());
            }
            let table = if name == BasisName::Lc { &LC_PRINTED } else { &SC_PRINTED };
            let m = DMatrix::from_fn(4, 4, |i, j| cplx::<T>(table[i][j].0, table[i][j].1));
            ModeTransform::from_rounded(m, name.as_str())?
                .with_uniform_phase(Complex::new(T::zero(), T::one()))
        }
    }
}

/// HG coefficients of the superposition `Σ_k w_k B_k` of basis modes.
pub fn superpose<T: Real>(
    basis: &ModeTransform<T>,
    weights: &CoefficientVector<T>,
) -> Result<CoefficientVector<T>> {
    if weights.len() != basis.dim() {
        return Err(Error::Dimension(format!(
            "{} weights for a {}-mode basis",
            weights.len(),
            basis.dim()
        )));
    }
    let n = basis.dim();
    let out = (0..n)
        .map(|j| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + weights.entries()[k] * basis.matrix()[(k, j)]
            })
        })
        .collect();
    CoefficientVector::new(out)
}

/// Gate mode that implements subtraction in `c`: entry `k` is `(-1)^k c_k`.
pub fn gate_mode<T: Real>(c: &CoefficientVector<T>) -> CoefficientVector<T> {
    CoefficientVector {
        entries: c
            .entries()
            .iter()
            .enumerate()
            .map(|(k, z)| if k % 2 == 1 { -*z } else { *z })
            .collect(),
    }
}
