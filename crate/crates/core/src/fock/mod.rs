//! Truncated Fock-space reference implementation.
//!
//! A [`FockDensity`] stores the full density matrix over `M` modes with a
//! per-mode cutoff `d_k` (levels `0..d_k`). Multi-indices are flattened
//! row-major with the last mode fastest. Everything here is brute force and
//! serves as the oracle for the analytic paths.

mod recurrence;
pub mod reduced;
pub mod wigner;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_sqrt, min_hermitian_eigenvalue};
use crate::mode_basis::hg_to_internal;
use crate::scalar::{lit, to_f64, tol, Real};
use crate::subtraction::{SubtractionSpec, TermKind};
use crate::wick::{LadderOp, OperatorWord, HERALD_FLOOR};

pub use recurrence::{gaussian_to_fock, gaussian_to_fock_with, DEFAULT_LEAK_BOUND};

/// Default per-mode cutoff for an `m`-mode oracle state.
pub fn default_cutoff(modes: usize) -> usize {
    match modes {
        0 | 1 => 30,
        2 => 14,
        3 => 8,
        _ => 6,
    }
}

/// Leak bound paired with [`default_cutoff`]. Four modes at cutoff 6 lose
/// about 3e-4 at the strongest squeezing of interest, so they get 1e-3.
pub fn default_leak_bound(modes: usize) -> f64 {
    if modes >= 4 {
        1e-3
    } else {
        DEFAULT_LEAK_BOUND
    }
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Mixed-radix layout of a multimode Fock basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl Layout {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Dimension(format!("invalid Fock dimensions {dims:?}")));
        }
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len() - 1).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Self { dims: dims.to_vec(), strides, total: dims.iter().product() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    /// Occupation of mode `k` in flat basis index `i`.
    #[inline]
    pub fn digit(&self, i: usize, k: usize) -> usize {
        (i / self.strides[k]) % self.dims[k]
    }

    pub fn digits(&self, i: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|k| self.digit(i, k)).collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity<T: Real> {
    layout: Layout,
    matrix: DMatrix<Complex<T>>,
    leak: T,
}

impl<T: Real> FockDensity<T> {
    pub fn new(dims: &[usize], matrix: DMatrix<Complex<T>>) -> Result<Self> {
        let layout = Layout::new(dims)?;
        if matrix.nrows() != layout.total || matrix.ncols() != layout.total {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for Fock dimensions {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { layout, matrix, leak: T::zero() })
    }

    /// `|ψ⟩⟨ψ|` for a normalized amplitude vector.
    pub fn from_pure(dims: &[usize], psi: &[Complex<T>]) -> Result<Self> {
        let layout = Layout::new(dims)?;
        if psi.len() != layout.total {
            return Err(Error::Dimension(format!("{} amplitudes for {dims:?}", psi.len())));
        }
        let m = DMatrix::from_fn(layout.total, layout.total, |i, j| psi[i] * psi[j].conj());
        let mut s = Self { layout, matrix: m, leak: T::zero() };
        s.normalize()?;
        Ok(s)
    }

    /// `|n⟩⟨n|` on one mode.
    pub fn number_state(cutoff: usize, n: usize) -> Result<Self> {
        if n >= cutoff {
            return Err(Error::Dimension(format!("|{n}⟩ needs a cutoff above {n}")));
        }
        let mut m = DMatrix::from_element(cutoff, cutoff, czero::<T>());
        m[(n, n)] = Complex::new(T::one(), T::zero());
        Self::new(&[cutoff], m)
    }

    /// Thermal state with mean occupation `nbar`.
    pub fn thermal(cutoff: usize, nbar: T) -> Result<Self> {
        let q = nbar / (nbar + T::one());
        let mut m = DMatrix::from_element(cutoff, cutoff, czero::<T>());
        let mut p = T::one() / (nbar + T::one());
        for n in 0..cutoff {
            m[(n, n)] = Complex::new(p, T::zero());
            p *= q;
        }
        let mut s = Self::new(&[cutoff], m)?;
        s.normalize()?;
        Ok(s)
    }

    pub(crate) fn with_leak(mut self, leak: T) -> Self {
        self.leak = leak;
        self
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn dims(&self) -> &[usize] {
        self.layout.dims()
    }

    pub fn modes(&self) -> usize {
        self.layout.dims.len()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    /// Probability that fell outside the cutoff before renormalization.
    pub fn leak(&self) -> T {
        self.leak
    }

    pub fn trace(&self) -> T {
        (0..self.layout.total).fold(T::zero(), |a, i| a + self.matrix[(i, i)].re)
    }

    /// Rescales to unit trace and returns the previous trace.
    pub fn normalize(&mut self) -> Result<T> {
        let t = self.trace();
        if !(t > T::zero()) {
            return Err(Error::Unphysical(format!("trace {t} is not positive")));
        }
        self.matrix.iter_mut().for_each(|z| *z = z.unscale(t));
        Ok(t)
    }

    pub fn purity(&self) -> T {
        // tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
    }

    pub fn min_eigenvalue(&self) -> T {
        min_hermitian_eigenvalue(&self.hermitian_part())
    }

    fn hermitian_part(&self) -> DMatrix<Complex<T>> {
        (&self.matrix + self.matrix.adjoint()).scale(lit(0.5))
    }

    pub fn hermiticity_deviation(&self) -> T {
        (&self.matrix - self.matrix.adjoint()).iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt()))
    }

    /// Trace 1 within 1e-9, Hermitian, eigenvalues above -1e-8.
    pub fn check_valid(&self) -> Result<()> {
        let t = self.trace();
        if (t - T::one()).abs() > tol::<T>(1e-9) {
            return Err(Error::Unphysical(format!("trace {t}")));
        }
        if self.hermiticity_deviation() > tol::<T>(1e-9) {
            return Err(Error::Unphysical("density matrix is not Hermitian".into()));
        }
        let e = self.min_eigenvalue();
        if e < -tol::<T>(1e-8) {
            return Err(Error::Unphysical(format!("eigenvalue {e}")));
        }
        Ok(())
    }

    /// Reduced state of the listed modes (kept in ascending mode order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Dimension("partial trace must keep at least one mode".into()));
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.iter().any(|&k| k >= self.modes()) {
            return Err(Error::Dimension(format!("modes {keep:?} out of range for {} modes", self.modes())));
        }
        if keep.len() == self.modes() {
            return Ok(self.clone());
        }
        let traced: Vec<usize> = (0..self.modes()).filter(|k| !keep.contains(k)).collect();
        let kdims: Vec<usize> = keep.iter().map(|&k| self.dims()[k]).collect();
        let tdims: Vec<usize> = traced.iter().map(|&k| self.dims()[k]).collect();
        let kl = Layout::new(&kdims)?;
        let tl = Layout::new(&tdims)?;
        let embed = |layout: &Layout, modes: &[usize], idx: usize| -> usize {
            (0..modes.len()).map(|p| layout.digit(idx, p) * self.layout.strides[modes[p]]).sum()
        };
        let kpos: Vec<usize> = (0..kl.total).map(|i| embed(&kl, &keep, i)).collect();
        let tpos: Vec<usize> = (0..tl.total).map(|i| embed(&tl, &traced, i)).collect();
        let m = DMatrix::from_fn(kl.total, kl.total, |i, j| {
            tpos.iter().fold(czero::<T>(), |a, &t| a + self.matrix[(kpos[i] + t, kpos[j] + t)])
        });
        Ok(Self { layout: kl, matrix: m, leak: self.leak })
    }

    /// Keeps levels below `dims` in each mode (no renormalization).
    pub fn truncate(&self, dims: &[usize]) -> Result<Self> {
        if dims.len() != self.modes() || dims.iter().zip(self.dims()).any(|(a, b)| a > b) {
            return Err(Error::Dimension(format!("cannot truncate {:?} to {dims:?}", self.dims())));
        }
        let nl = Layout::new(dims)?;
        let map: Vec<usize> = (0..nl.total).map(|i| self.layout.index(&nl.digits(i))).collect();
        let m = DMatrix::from_fn(nl.total, nl.total, |i, j| self.matrix[(map[i], map[j])]);
        Ok(Self { layout: nl, matrix: m, leak: self.leak })
    }

    /// Embeds into larger cutoffs with zeros.
    pub fn pad(&self, dims: &[usize]) -> Result<Self> {
        if dims.len() != self.modes() || dims.iter().zip(self.dims()).any(|(a, b)| a < b) {
            return Err(Error::Dimension(format!("cannot pad {:?} to {dims:?}", self.dims())));
        }
        let nl = Layout::new(dims)?;
        let map: Vec<usize> = (0..self.layout.total).map(|i| nl.index(&self.layout.digits(i))).collect();
        let mut m = DMatrix::from_element(nl.total, nl.total, czero::<T>());
        for (i, &mi) in map.iter().enumerate() {
            for (j, &mj) in map.iter().enumerate() {
                m[(mi, mj)] = self.matrix[(i, j)];
            }
        }
        Ok(Self { layout: nl, matrix: m, leak: self.leak })
    }

    /// `Lρ` for `L = Σ_k c_k b_k`, acting on the row index.
    fn lower_rows(&self, m: &DMatrix<Complex<T>>, c: &[Complex<T>]) -> DMatrix<Complex<T>> {
        let n = self.layout.total;
        let sq: Vec<T> = (0..=*self.dims().iter().max().unwrap_or(&1)).map(|k| lit::<T>(k as f64).sqrt()).collect();
        let mut out = DMatrix::from_element(n, n, czero::<T>());
        for (k, ck) in c.iter().enumerate() {
            if ck.re == T::zero() && ck.im == T::zero() {
                continue;
            }
            let s = self.layout.strides[k];
            let d = self.layout.dims[k];
            for i in 0..n {
                let occ = self.layout.digit(i, k);
                if occ + 1 >= d {
                    continue;
                }
                let f = *ck * sq[occ + 1];
                for j in 0..n {
                    out[(i, j)] += f * m[(i + s, j)];
                }
            }
        }
        out
    }

    /// Unnormalized `L ρ L†` for `L = Σ_k c_k b_k` (internal-frame coefficients).
    pub fn sandwich(&self, c: &[Complex<T>]) -> Result<Self> {
        if c.len() > self.modes() {
            return Err(Error::Dimension(format!("{}-mode operator on {} modes", c.len(), self.modes())));
        }
        let x = self.lower_rows(&self.matrix, c);
        let y = self.lower_rows(&x.adjoint(), c);
        Ok(Self { layout: self.layout.clone(), matrix: y.adjoint(), leak: self.leak })
    }

    /// `Σ_t w_t K_t ρ K_t†` of the channel, renormalized.
    pub fn apply_channel(&self, spec: &SubtractionSpec<T>) -> Result<(Self, ChannelDiagnostics<T>)> {
        if spec.c().len() != self.modes() {
            return Err(Error::Dimension(format!(
                "{}-mode subtraction on a {}-mode state",
                spec.c().len(),
                self.modes()
            )));
        }
        self.apply_terms(&internal_terms(spec, self.modes(), None)?, spec.w0())
    }

    /// Channel given as internal-frame terms (see [`internal_terms`]).
    pub fn apply_terms(&self, terms: &[InternalTerm<T>], w0: T) -> Result<(Self, ChannelDiagnostics<T>)> {
        let mut acc = DMatrix::from_element(self.layout.total, self.layout.total, czero::<T>());
        for (w, op) in terms {
            let term = match op {
                None => self.matrix.clone(),
                Some(c) => self.sandwich(c)?.matrix,
            };
            acc += term.scale(*w);
        }
        let mut out = Self { layout: self.layout.clone(), matrix: acc, leak: self.leak };
        let tr = out.trace();
        if !(tr > lit::<T>(HERALD_FLOOR)) {
            return Err(Error::Unheralded(to_f64(tr)));
        }
        out.normalize()?;
        Ok((out, ChannelDiagnostics { trace: tr, heralding_weight: tr - w0 }))
    }

    /// `tr(ρ W)` for a word of single-mode ladder operators. Components that
    /// leave the truncated space are dropped.
    pub fn word_expectation(&self, word: &OperatorWord) -> Result<Complex<T>> {
        if let Some(&(k, _)) = word.letters.iter().find(|(k, _)| *k >= self.modes()) {
            return Err(Error::Dimension(format!("mode {k} out of range for {} modes", self.modes())));
        }
        let n = self.layout.total;
        let mut acc = czero::<T>();
        let mut occ = vec![0usize; self.modes()];
        'basis: for i in 0..n {
            for (k, o) in occ.iter_mut().enumerate() {
                *o = self.layout.digit(i, k);
            }
            let mut coef = 1.0f64;
            for &(k, dagger) in word.letters.iter().rev() {
                if dagger {
                    occ[k] += 1;
                    if occ[k] >= self.layout.dims[k] {
                        continue 'basis;
                    }
                    coef *= (occ[k] as f64).sqrt();
                } else {
                    if occ[k] == 0 {
                        continue 'basis;
                    }
                    coef *= (occ[k] as f64).sqrt();
                    occ[k] -= 1;
                }
            }
            let j = self.layout.index(&occ);
            acc += self.matrix[(i, j)].scale(lit(coef));
        }
        Ok(acc)
    }

    /// `tr(ρ L_1 L_2 ...)` for linear ladder operators, by expansion into words.
    pub fn expectation(&self, ops: &[LadderOp<T>]) -> Result<Complex<T>> {
        let m = self.modes();
        if let Some(op) = ops.iter().find(|o| o.modes() != m) {
            return Err(Error::Dimension(format!("{}-mode operator on {m} modes", op.modes())));
        }
        let terms: Vec<Vec<(usize, bool, Complex<T>)>> = ops
            .iter()
            .map(|op| {
                op.coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| z.re != T::zero() || z.im != T::zero())
                    .map(|(slot, z)| (slot % m, slot >= m, *z))
                    .collect()
            })
            .collect();
        let mut acc = czero::<T>();
        let mut choice = vec![0usize; ops.len()];
        if terms.iter().any(|t| t.is_empty()) {
            return Ok(acc);
        }
        loop {
            let mut coef = Complex::new(T::one(), T::zero());
            let mut letters = Vec::with_capacity(ops.len());
            for (p, &c) in choice.iter().enumerate() {
                let (k, d, z) = terms[p][c];
                coef *= z;
                letters.push((k, d));
            }
            acc += coef * self.word_expectation(&OperatorWord::new(letters))?;
            // odometer over the term choices
            let mut p = 0;
            loop {
                if p == choice.len() {
                    return Ok(acc);
                }
                choice[p] += 1;
                if choice[p] < terms[p].len() {
                    break;
                }
                choice[p] = 0;
                p += 1;
            }
        }
    }

    fn require_single_mode(&self) -> Result<usize> {
        if self.modes() != 1 {
            return Err(Error::Dimension(format!("expected a single-mode state, got {} modes", self.modes())));
        }
        Ok(self.dims()[0])
    }

    /// Photon-number distribution of a single-mode state.
    pub fn photon_distribution(&self) -> Result<Vec<T>> {
        let d = self.require_single_mode()?;
        Ok((0..d).map(|n| self.matrix[(n, n)].re).collect())
    }

    /// `W0 = 2πW(0,0) = Σ_n (-1)^n ρ_nn`.
    pub fn parity_w0(&self) -> Result<T> {
        Ok(self
            .photon_distribution()?
            .iter()
            .enumerate()
            .fold(T::zero(), |a, (n, p)| if n % 2 == 0 { a + *p } else { a - *p }))
    }

    /// Phase-averaged `(m2, m4, K_ex)` from the photon-number distribution.
    pub fn phase_averaged_kurtosis(&self) -> Result<(T, T, T)> {
        let p = self.photon_distribution()?;
        let (mut m2, mut m4) = (T::zero(), T::zero());
        for (n, pn) in p.iter().enumerate() {
            let nf = lit::<T>(n as f64);
            m2 += *pn * (lit::<T>(2.0) * nf + T::one());
            m4 += *pn * (lit::<T>(6.0) * nf * nf + lit::<T>(6.0) * nf + lit::<T>(3.0));
        }
        Ok((m2, m4, m4 / (m2 * m2) - lit(3.0)))
    }

    /// Single-mode pure-loss channel with transmissivity `eta`.
    pub fn apply_loss(&self, eta: T) -> Result<Self> {
        let d = self.require_single_mode()?;
        if !(eta > T::zero() && eta <= T::one()) {
            return Err(Error::InvalidParameter(format!("efficiency {eta} outside (0, 1]")));
        }
        if eta == T::one() {
            return Ok(self.clone());
        }
        let lb = log_binomials::<T>(d);
        let (le, lr) = (eta.ln(), (T::one() - eta).ln());
        let m = DMatrix::from_fn(d, d, |i, j| {
            let mut acc = czero::<T>();
            for k in 0..d - i.max(j) {
                let lw = lit::<T>(0.5) * (lb[i + k][k] + lb[j + k][k])
                    + lit::<T>((i + j) as f64 * 0.5) * le
                    + lit::<T>(k as f64) * lr;
                acc += self.matrix[(i + k, j + k)].scale(lw.exp());
            }
            acc
        });
        Ok(Self { layout: self.layout.clone(), matrix: m, leak: self.leak })
    }
}

/// `ln C(n, k)` for `n, k < d`.
pub(crate) fn log_binomials<T: Real>(d: usize) -> Vec<Vec<T>> {
    let lf: Vec<f64> = (0..d.max(1)).scan(0.0f64, |acc, n| {
        if n > 0 {
            *acc += (n as f64).ln();
        }
        Some(*acc)
    }).collect();
    (0..d)
        .map(|n| (0..=n).map(|k| lit::<T>(lf[n] - lf[k] - lf[n - k])).collect())
        .collect()
}

/// A channel term: weight and the internal-frame coefficients of its
/// lowering operator (`None` for passthrough).
pub type InternalTerm<T> = (T, Option<Vec<Complex<T>>>);

/// Channel terms of `spec` as internal-frame operators on `modes` modes.
/// With `w` given, coefficients are expressed in the frame `b' = W b`,
/// i.e. mapped by `conj(W)`. Background modes beyond the state are vacuum
/// and are dropped.
pub fn internal_terms<T: Real>(
    spec: &SubtractionSpec<T>,
    modes: usize,
    w: Option<&DMatrix<Complex<T>>>,
) -> Result<Vec<InternalTerm<T>>> {
    let mut out = Vec::new();
    for t in spec.channel_terms().iter() {
        let c = match &t.kind {
            TermKind::Passthrough => {
                out.push((t.weight, None));
                continue;
            }
            TermKind::Coherent(c) => {
                if c.len() > modes {
                    return Err(Error::Dimension(format!(
                        "{}-mode subtraction on a {modes}-mode state",
                        c.len()
                    )));
                }
                let mut v = hg_to_internal(c.entries());
                v.resize(modes, czero::<T>());
                v
            }
            TermKind::SingleMode(k) if *k < modes => {
                let mut v = vec![czero::<T>(); modes];
                v[*k] = Complex::new(T::one(), T::zero());
                v
            }
            TermKind::SingleMode(_) => continue,
        };
        let c = match w {
            None => c,
            Some(w) => (0..modes)
                .map(|k| (0..modes).fold(czero::<T>(), |a, j| a + w[(k, j)].conj() * c[j]))
                .collect(),
        };
        out.push((t.weight, Some(c)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDiagnostics<T: Real> {
    /// `tr R[ρ]` before renormalization.
    pub trace: T,
    /// `tr R[ρ] - w0`.
    pub heralding_weight: T,
}

fn check_same_dims<T: Real>(a: &FockDensity<T>, b: &FockDensity<T>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::Dimension(format!("Fock dimensions {:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Uhlmann fidelity `(tr √(√ρ1 ρ2 √ρ1))²`.
pub fn fidelity<T: Real>(a: &FockDensity<T>, b: &FockDensity<T>) -> Result<T> {
    check_same_dims(a, b)?;
    for s in [a, b] {
        if s.min_eigenvalue() < -tol::<T>(1e-8) {
            return Err(Error::Unphysical("fidelity of a non-positive operator".into()));
        }
    }
    let s = hermitian_sqrt(&a.hermitian_part());
    let m = &s * b.hermitian_part() * &s;
    let m = (&m + m.adjoint()).scale(lit(0.5));
    let root = m.symmetric_eigen().eigenvalues.iter().fold(T::zero(), |acc, e| acc + e.max(T::zero()).sqrt());
    Ok(root * root)
}

/// `tr(ρ1 ρ2)`, equal to `4π ∫ W1 W2` in this quadrature convention.
pub fn overlap<T: Real>(a: &FockDensity<T>, b: &FockDensity<T>) -> Result<T> {
    check_same_dims(a, b)?;
    Ok((a.matrix().component_mul(&b.matrix().transpose())).iter().fold(T::zero(), |acc, z| acc + z.re))
}

/// `½ Σ |λ_i(ρ1 - ρ2)|`.
pub fn trace_distance<T: Real>(a: &FockDensity<T>, b: &FockDensity<T>) -> Result<T> {
    check_same_dims(a, b)?;
    let d = a.matrix() - b.matrix();
    let d = (&d + d.adjoint()).scale(lit(0.5));
    Ok(d.symmetric_eigen().eigenvalues.iter().fold(T::zero(), |acc, e| acc + e.abs()) * lit(0.5))
}

/// Oracle subtraction on the full multimode state: the Gaussian is built one
/// level above `cutoff` so the lowering operators see the top level, then
/// truncated back. The result lives in the modes of `basis` (identity frame
/// when `None`), so mode `k` of the output is basis mode `k`.
pub fn subtract_gaussian<T: Real>(
    v: &crate::gaussian::CovarianceMatrix<T>,
    spec: &SubtractionSpec<T>,
    basis: Option<&crate::mode_basis::ModeTransform<T>>,
    cutoff: usize,
    leak_bound: f64,
) -> Result<(FockDensity<T>, ChannelDiagnostics<T>)> {
    subtract_gaussian_dims(v, spec, basis, &vec![cutoff; v.modes()], leak_bound)
}

/// [`subtract_gaussian`] with a cutoff per mode.
pub fn subtract_gaussian_dims<T: Real>(
    v: &crate::gaussian::CovarianceMatrix<T>,
    spec: &SubtractionSpec<T>,
    basis: Option<&crate::mode_basis::ModeTransform<T>>,
    dims: &[usize],
    leak_bound: f64,
) -> Result<(FockDensity<T>, ChannelDiagnostics<T>)> {
    let m = v.modes();
    if dims.len() != m {
        return Err(Error::Dimension(format!("{} cutoffs for {m} modes", dims.len())));
    }
    let (vb, w) = match basis {
        None => (v.clone(), None),
        Some(b) => (crate::gaussian::change_basis(v, b)?, Some(b.internal_operator_matrix())),
    };
    let terms = internal_terms(spec, m, w.as_ref())?;
    let above: Vec<usize> = dims.iter().map(|d| d + 1).collect();
    let big = gaussian_to_fock_with(&vb, &above, leak_bound)?;
    let (out, diag) = big.apply_terms(&terms, spec.w0())?;
    drop(big);
    let mut small = out.truncate(dims)?;
    let t = small.normalize()?;
    let leak = (T::one() - t).max(out.leak());
    if to_f64(leak) > leak_bound {
        return Err(Error::Truncation { leak: to_f64(leak), bound: leak_bound });
    }
    Ok((small.with_leak(leak), diag))
}

pub const FOCUS_WEIGHT: f64 = 10.0;

/// Per-mode cutoffs whose product, one level up, stays within `budget`.
/// Levels go greedily to the mode whose photon-number tail is heaviest,
/// using the tail of `n p_n` so the estimate also covers a subtraction.
/// The tail of `focus` counts [`FOCUS_WEIGHT`] times.
pub fn budget_cutoffs<T: Real>(
    v: &crate::gaussian::CovarianceMatrix<T>,
    budget: usize,
    focus: Option<usize>,
) -> Result<Vec<usize>> {
    const PROBE: usize = 40;
    let m = v.modes();
    let mut tails = Vec::with_capacity(m);
    for k in 0..m {
        let p = gaussian_to_fock_with(&v.marginal(&[k])?, &[PROBE], 1.0)?.photon_distribution()?;
        let w: Vec<f64> = p.iter().enumerate().map(|(n, x)| (n + 1) as f64 * to_f64(*x)).collect();
        // tail[d] = weight at or above level d
        let mut tail = vec![0.0; PROBE + 1];
        for d in (0..PROBE).rev() {
            tail[d] = tail[d + 1] + w[d];
        }
        if focus == Some(k) {
            tail.iter_mut().for_each(|t| *t *= FOCUS_WEIGHT);
        }
        tails.push(tail);
    }
    let mut dims = vec![2usize; m];
    let size = |d: &[usize]| d.iter().map(|x| x + 1).product::<usize>();
    if size(&dims) > budget {
        return Err(Error::InvalidParameter(format!("budget {budget} is below the minimum for {m} modes")));
    }
    loop {
        let pick = (0..m)
            .filter(|&k| dims[k] < PROBE && {
                let mut t = dims.clone();
                t[k] += 1;
                size(&t) <= budget
            })
            .max_by(|&a, &b| tails[a][dims[a]].total_cmp(&tails[b][dims[b]]));
        match pick {
            Some(k) => dims[k] += 1,
            None => return Ok(dims),
        }
    }
}

#[cfg(test)]
mod tests;
