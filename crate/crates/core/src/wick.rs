//! Moments of Gaussian and photon-subtracted Gaussian states via Wick's
//! theorem.
//!
//! Operators are linear combinations of the internal ladder operators
//! `ζ = (b_0, ..., b_{N-1}, b_0†, ..., b_{N-1}†)`. For a zero-mean Gaussian
//! state the expectation of a product of such operators is the sum over
//! perfect pairings of products of ordered two-point functions
//! `⟨ζ_a ζ_b⟩`, which follow from `⟨r_a r_b⟩ = V_ab + iΩ_ab`.
//!
//! Moments of the subtracted state are ratios of Gaussian moments:
//! `⟨O⟩⁻ = Σ_t w_t ⟨L_t† O L_t⟩ / Σ_t w_t ⟨L_t† L_t⟩`.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::linalg::symplectic_form;
use crate::mode_basis::{hg_to_internal, CoefficientVector};
use crate::scalar::{lit, to_f64, Real};
use crate::subtraction::{SubtractionSpec, TermKind};

/// Longest operator product accepted by [`gaussian_moment`].
pub const MAX_WORD_LEN: usize = 16;

/// Heralding probabilities below this are treated as zero.
pub const HERALD_FLOOR: f64 = 1e-14;

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Ordered two-point functions `G_ab = ⟨ζ_a ζ_b⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSecondMoments<T: Real> {
    modes: usize,
    g: DMatrix<Complex<T>>,
}

impl<T: Real> ComplexSecondMoments<T> {
    pub fn from_covariance(v: &CovarianceMatrix<T>) -> Self {
        let n = v.modes();
        let half = lit::<T>(0.5);
        // rows: b_j = (x_j + i p_j)/2, b_j† = (x_j - i p_j)/2
        let mut t = DMatrix::from_element(2 * n, 2 * n, zero::<T>());
        for j in 0..n {
            t[(j, 2 * j)] = Complex::new(half, T::zero());
            t[(j, 2 * j + 1)] = Complex::new(T::zero(), half);
            t[(n + j, 2 * j)] = Complex::new(half, T::zero());
            t[(n + j, 2 * j + 1)] = Complex::new(T::zero(), -half);
        }
        let om = symplectic_form::<T>(n);
        let c = DMatrix::from_fn(2 * n, 2 * n, |a, b| Complex::new(v.matrix()[(a, b)], om[(a, b)]));
        let g = &t * c * t.transpose();
        Self { modes: n, g }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `⟨b_j b_k⟩`.
    pub fn m(&self, j: usize, k: usize) -> Complex<T> {
        self.g[(j, k)]
    }

    /// `⟨b_j† b_k⟩`.
    pub fn q(&self, j: usize, k: usize) -> Complex<T> {
        self.g[(self.modes + j, k)]
    }

    pub fn contractions(&self) -> &DMatrix<Complex<T>> {
        &self.g
    }

    fn pair(&self, a: &LadderOp<T>, b: &LadderOp<T>) -> Complex<T> {
        let mut acc = zero::<T>();
        for (i, ai) in a.coeffs.iter().enumerate() {
            if ai.re == T::zero() && ai.im == T::zero() {
                continue;
            }
            let mut row = zero::<T>();
            for (j, bj) in b.coeffs.iter().enumerate() {
                row += self.g[(i, j)] * *bj;
            }
            acc += *ai * row;
        }
        acc
    }
}

/// `Σ_k (c_k b_k + d_k b_k†)` over `N` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderOp<T: Real> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> LadderOp<T> {
    fn unit(n: usize, slot: usize) -> Self {
        let mut coeffs = vec![zero::<T>(); 2 * n];
        coeffs[slot] = Complex::new(T::one(), T::zero());
        Self { coeffs }
    }

    pub fn annihilation(n: usize, k: usize) -> Self {
        Self::unit(n, k)
    }

    pub fn creation(n: usize, k: usize) -> Self {
        Self::unit(n, n + k)
    }

    /// `Σ_k c_k b_k` for internal-frame coefficients `c` (zero-padded to `n`).
    pub fn lowering(n: usize, c: &[Complex<T>]) -> Result<Self> {
        if c.len() > n {
            return Err(Error::Dimension(format!("{}-mode operator on {n} modes", c.len())));
        }
        let mut coeffs = vec![zero::<T>(); 2 * n];
        coeffs[..c.len()].copy_from_slice(c);
        Ok(Self { coeffs })
    }

    /// Lowering operator of the HG mode vector `u`.
    pub fn mode_lowering(n: usize, u: &CoefficientVector<T>) -> Result<Self> {
        Self::lowering(n, &hg_to_internal(u.entries()))
    }

    /// `x_k = b_k + b_k†`.
    pub fn x(n: usize, k: usize) -> Self {
        let mut op = Self::unit(n, k);
        op.coeffs[n + k] = Complex::new(T::one(), T::zero());
        op
    }

    /// `p_k = -i b_k + i b_k†`.
    pub fn p(n: usize, k: usize) -> Self {
        let mut coeffs = vec![zero::<T>(); 2 * n];
        coeffs[k] = Complex::new(T::zero(), -T::one());
        coeffs[n + k] = Complex::new(T::zero(), T::one());
        Self { coeffs }
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn dagger(&self) -> Self {
        let n = self.modes();
        let mut coeffs = vec![zero::<T>(); 2 * n];
        for k in 0..n {
            coeffs[k] = self.coeffs[n + k].conj();
            coeffs[n + k] = self.coeffs[k].conj();
        }
        Self { coeffs }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { coeffs: self.coeffs.iter().map(|z| *z * s).collect() }
    }
}

/// Product of single-mode ladder operators, left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OperatorWord {
    pub letters: Vec<(usize, bool)>,
}

impl OperatorWord {
    /// `(mode, dagger)` letters.
    pub fn new(letters: Vec<(usize, bool)>) -> Self {
        Self { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Reversed word with every dagger flag flipped: the adjoint.
    pub fn adjoint(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|&(k, d)| (k, !d)).collect() }
    }

    pub fn to_ops<T: Real>(&self, n: usize) -> Result<Vec<LadderOp<T>>> {
        self.letters
            .iter()
            .map(|&(k, d)| {
                if k >= n {
                    Err(Error::Dimension(format!("mode {k} out of range for {n} modes")))
                } else if d {
                    Ok(LadderOp::creation(n, k))
                } else {
                    Ok(LadderOp::annihilation(n, k))
                }
            })
            .collect()
    }

    /// All words of exactly `len` letters over `modes` modes.
    pub fn all(modes: usize, len: usize) -> Vec<Self> {
        let letters = 2 * modes;
        let count = letters.pow(len as u32);
        (0..count)
            .map(|mut idx| {
                let mut w = Vec::with_capacity(len);
                for _ in 0..len {
                    let l = idx % letters;
                    idx /= letters;
                    w.push((l / 2, l % 2 == 1));
                }
                Self { letters: w }
            })
            .collect()
    }
}

/// `⟨ops_0 ops_1 ...⟩` on the Gaussian state.
pub fn gaussian_moment<T: Real>(moments: &ComplexSecondMoments<T>, ops: &[LadderOp<T>]) -> Result<Complex<T>> {
    if ops.len() > MAX_WORD_LEN {
        return Err(Error::InvalidParameter(format!(
            "operator product of length {} exceeds {MAX_WORD_LEN}",
            ops.len()
        )));
    }
    if let Some(op) = ops.iter().find(|o| o.modes() != moments.modes()) {
        return Err(Error::Dimension(format!(
            "{}-mode operator on a {}-mode state",
            op.modes(),
            moments.modes()
        )));
    }
    if ops.len() % 2 == 1 {
        return Ok(zero());
    }
    if ops.is_empty() {
        return Ok(Complex::new(T::one(), T::zero()));
    }
    let n = ops.len();
    let mut pairs = DMatrix::from_element(n, n, zero::<T>());
    for i in 0..n {
        for j in i + 1..n {
            pairs[(i, j)] = moments.pair(&ops[i], &ops[j]);
        }
    }
    let full = (1u32 << n) - 1;
    let mut memo = vec![None; 1usize << n];
    Ok(pairings(&pairs, full, &mut memo))
}

/// Sum over perfect pairings of the set bits of `mask`, pairing the lowest
/// index first.
fn pairings<T: Real>(p: &DMatrix<Complex<T>>, mask: u32, memo: &mut [Option<Complex<T>>]) -> Complex<T> {
    if mask == 0 {
        return Complex::new(T::one(), T::zero());
    }
    if let Some(v) = memo[mask as usize] {
        return v;
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << i);
    let mut acc = zero::<T>();
    let mut m = rest;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        m &= m - 1;
        let c = p[(i, j)];
        if c.re != T::zero() || c.im != T::zero() {
            acc += c * pairings(p, rest & !(1 << j), memo);
        }
    }
    memo[mask as usize] = Some(acc);
    acc
}

/// Phase-averaged second and fourth quadrature moments and the excess
/// kurtosis `m4/m2² - 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAveragedMoments<T: Real> {
    pub m2: T,
    pub m4: T,
    pub excess_kurtosis: T,
}

/// A Gaussian state after the channel, kept as weighted Gaussian terms.
#[derive(Debug, Clone)]
pub struct SubtractedState<T: Real> {
    moments: ComplexSecondMoments<T>,
    terms: Vec<(T, Option<LadderOp<T>>)>,
    norm: T,
    w0: T,
}

impl<T: Real> SubtractedState<T> {
    /// The Gaussian state itself.
    pub fn gaussian(v: &CovarianceMatrix<T>) -> Self {
        Self {
            moments: ComplexSecondMoments::from_covariance(v),
            terms: vec![(T::one(), None)],
            norm: T::one(),
            w0: T::one(),
        }
    }

    pub fn new(v: &CovarianceMatrix<T>, spec: &SubtractionSpec<T>) -> Result<Self> {
        let n = v.modes();
        let moments = ComplexSecondMoments::from_covariance(v);
        let mut terms = Vec::new();
        for t in spec.channel_terms().iter() {
            match &t.kind {
                TermKind::Passthrough => terms.push((t.weight, None)),
                TermKind::Coherent(c) => terms.push((t.weight, Some(LadderOp::mode_lowering(n, c)?))),
                // background modes beyond the state are vacuum and never click
                TermKind::SingleMode(k) if *k < n => {
                    terms.push((t.weight, Some(LadderOp::annihilation(n, *k))))
                }
                TermKind::SingleMode(_) => {}
            }
        }
        let mut s = Self { moments, terms, norm: T::one(), w0: spec.w0() };
        let norm = s.unnormalized(&[])?.re;
        if !(norm > lit::<T>(HERALD_FLOOR)) {
            return Err(Error::Unheralded(to_f64(norm)));
        }
        s.norm = norm;
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.moments.modes()
    }

    pub fn moments(&self) -> &ComplexSecondMoments<T> {
        &self.moments
    }

    /// `tr R[ρ]`.
    pub fn trace(&self) -> T {
        self.norm
    }

    /// `tr R[ρ] - w0`, the weight of genuine subtraction events.
    pub fn heralding_weight(&self) -> T {
        self.norm - self.w0
    }

    fn unnormalized(&self, ops: &[LadderOp<T>]) -> Result<Complex<T>> {
        let mut acc = zero::<T>();
        for (w, l) in &self.terms {
            let val = match l {
                None => gaussian_moment(&self.moments, ops)?,
                Some(l) => {
                    let mut word = Vec::with_capacity(ops.len() + 2);
                    word.push(l.dagger());
                    word.extend_from_slice(ops);
                    word.push(l.clone());
                    gaussian_moment(&self.moments, &word)?
                }
            };
            acc += val.scale(*w);
        }
        Ok(acc)
    }

    pub fn expectation(&self, ops: &[LadderOp<T>]) -> Result<Complex<T>> {
        Ok(self.unnormalized(ops)?.unscale(self.norm))
    }

    pub fn word_expectation(&self, word: &OperatorWord) -> Result<Complex<T>> {
        self.expectation(&word.to_ops(self.modes())?)
    }

    /// Phase-averaged moments of `x_θ = A e^{-iθ} + A† e^{iθ}` in mode `u`.
    pub fn phase_averaged(&self, u: &CoefficientVector<T>) -> Result<PhaseAveragedMoments<T>> {
        let a = LadderOp::mode_lowering(self.modes(), u)?;
        let ad = a.dagger();
        let m2 = self.expectation(&[a.clone(), ad.clone()])?.re + self.expectation(&[ad.clone(), a.clone()])?.re;
        let mut m4 = T::zero();
        for pattern in BALANCED_4 {
            let word: Vec<LadderOp<T>> =
                pattern.iter().map(|&d| if d { ad.clone() } else { a.clone() }).collect();
            m4 += self.expectation(&word)?.re;
        }
        Ok(PhaseAveragedMoments { m2, m4, excess_kurtosis: m4 / (m2 * m2) - lit(3.0) })
    }
}

/// Orderings of two `A` and two `A†`: the only fourth-order words that
/// survive the phase average.
const BALANCED_4: [[bool; 4]; 6] = [
    [false, false, true, true],
    [false, true, false, true],
    [false, true, true, false],
    [true, false, false, true],
    [true, false, true, false],
    [true, true, false, false],
];

/// `⟨O⟩` under the normalized channel output.
pub fn subtracted_moment<T: Real>(
    v: &CovarianceMatrix<T>,
    spec: &SubtractionSpec<T>,
    word: &OperatorWord,
) -> Result<Complex<T>> {
    SubtractedState::new(v, spec)?.word_expectation(word)
}

/// Infinite-sample limit of the pooled phase-randomized kurtosis estimator in
/// mode `u` (HG coefficients).
pub fn excess_kurtosis_analytic<T: Real>(
    v: &CovarianceMatrix<T>,
    spec: &SubtractionSpec<T>,
    u: &CoefficientVector<T>,
) -> Result<T> {
    Ok(SubtractedState::new(v, spec)?.phase_averaged(u)?.excess_kurtosis)
}

pub fn gaussian_excess_kurtosis<T: Real>(v: &CovarianceMatrix<T>, u: &CoefficientVector<T>) -> Result<T> {
    Ok(SubtractedState::gaussian(v).phase_averaged(u)?.excess_kurtosis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{covariance_from_squeeze, SqueezeSpec};
    use crate::mode_basis::{builtin_basis, BasisName};
    use crate::scalar::cabs;
    use crate::subtraction::{ideal_spec, lab_spec};
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> CovarianceMatrix<f64> {
        CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))).unwrap()
    }

    fn e(n: usize, k: usize) -> CoefficientVector<f64> {
        CoefficientVector::basis_vector(n, k).unwrap()
    }

    #[test]
    fn vacuum_number_vanishes() {
        let m = ComplexSecondMoments::from_covariance(&CovarianceMatrix::<f64>::vacuum(1).unwrap());
        let w = OperatorWord::new(vec![(0, true), (0, false)]);
        assert!(cabs(gaussian_moment(&m, &w.to_ops(1).unwrap()).unwrap()) < 1e-15);
        let w = OperatorWord::new(vec![(0, false), (0, true)]);
        assert!((gaussian_moment(&m, &w.to_ops(1).unwrap()).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn squeezed_second_and_fourth_moments() {
        let m = ComplexSecondMoments::from_covariance(&diag(&[2.0, 0.5]));
        assert!((m.q(0, 0).re - 0.125).abs() < 1e-15);
        assert!((m.m(0, 0).re - 0.375).abs() < 1e-15);
        let w = OperatorWord::new(vec![(0, true), (0, true), (0, false), (0, false)]);
        let v = gaussian_moment(&m, &w.to_ops(1).unwrap()).unwrap();
        assert!((v.re - 0.171875).abs() < 1e-15 && v.im.abs() < 1e-15);
    }

    #[test]
    fn odd_words_vanish_and_long_words_error() {
        let m = ComplexSecondMoments::from_covariance(&diag(&[2.0, 0.5]));
        let w = OperatorWord::new(vec![(0, true), (0, true), (0, false)]);
        assert_eq!(gaussian_moment(&m, &w.to_ops(1).unwrap()).unwrap(), zero());
        let w = OperatorWord::new(vec![(0, true); MAX_WORD_LEN + 2]);
        assert!(gaussian_moment(&m, &w.to_ops(1).unwrap()).is_err());
        assert!(OperatorWord::new(vec![(3, true)]).to_ops::<f64>(2).is_err());
    }

    #[test]
    fn vacuum_cannot_be_subtracted() {
        let v = CovarianceMatrix::<f64>::vacuum(1).unwrap();
        assert!(matches!(SubtractedState::new(&v, &ideal_spec(e(1, 0))), Err(Error::Unheralded(_))));
    }

    #[test]
    fn subtracted_squeezed_x_variance() {
        let v = diag(&[2.0, 0.5]);
        let s = SubtractedState::new(&v, &ideal_spec(e(1, 0))).unwrap();
        let x = LadderOp::x(1, 0);
        assert!((s.expectation(&[x.clone(), x]).unwrap().re - 6.0).abs() < 1e-12);
        let p = LadderOp::p(1, 0);
        assert!((s.expectation(&[p.clone(), p]).unwrap().re - 1.5).abs() < 1e-12);
    }

    #[test]
    fn subtraction_is_mode_selective_for_product_states() {
        let v = diag(&[2.0, 0.5, 1.5, 0.8]);
        let s = SubtractedState::new(&v, &ideal_spec(e(2, 0))).unwrap();
        let g = SubtractedState::gaussian(&v);
        for w in OperatorWord::all(1, 4) {
            let shifted = OperatorWord::new(w.letters.iter().map(|&(_, d)| (1, d)).collect());
            let a = s.word_expectation(&shifted).unwrap();
            let b = g.word_expectation(&shifted).unwrap();
            assert!(cabs(a - b) < 1e-12);
        }
    }

    #[test]
    fn kurtosis_reference_values() {
        let v = CovarianceMatrix::<f64>::vacuum(1).unwrap();
        let spec = SubtractionSpec::new(e(1, 0), 1.0, 1.0, 1).unwrap();
        assert!(excess_kurtosis_analytic(&v, &spec, &e(1, 0)).unwrap().abs() < 1e-15);
        let v = diag(&[2.0, 0.5]);
        assert!((gaussian_excess_kurtosis(&v, &e(1, 0)).unwrap() - 0.54).abs() < 1e-12);
        let k = excess_kurtosis_analytic(&v, &ideal_spec(e(1, 0)), &e(1, 0)).unwrap();
        assert!((k + 1.0333333333333).abs() < 1e-10, "{k}");
    }

    #[test]
    fn lab_hg_pattern() {
        let v = covariance_from_squeeze(&SqueezeSpec::<f64>::measured_hg());
        let s = SubtractedState::new(&v, &lab_spec(e(4, 0))).unwrap();
        let k: Vec<f64> = (0..3).map(|m| s.phase_averaged(&e(4, m)).unwrap().excess_kurtosis).collect();
        assert!((k[0] + 0.529).abs() < 2e-3, "{k:?}");
        for m in 1..3 {
            let g = gaussian_excess_kurtosis(&v, &e(4, m)).unwrap();
            assert!((k[m] - g).abs() < 0.05, "{m}: {} vs {g}", k[m]);
        }
    }

    #[test]
    fn cluster_argmins() {
        let v = covariance_from_squeeze(&SqueezeSpec::<f64>::measured_hg());
        let lc = builtin_basis::<f64>(BasisName::Lc, 4).unwrap();
        let sc = builtin_basis::<f64>(BasisName::Sc, 4).unwrap();
        let kurt = |b: &crate::mode_basis::ModeTransform<f64>, sub: usize| -> Vec<f64> {
            let s = SubtractedState::new(&v, &lab_spec(b.mode(sub).unwrap())).unwrap();
            (0..4).map(|m| s.phase_averaged(&b.mode(m).unwrap()).unwrap().excess_kurtosis).collect()
        };
        let argmin = |k: &[f64]| (0..4).min_by(|&a, &b| k[a].partial_cmp(&k[b]).unwrap()).unwrap();
        let k = kurt(&lc, 3);
        assert_eq!(argmin(&k), 2, "{k:?}");
        assert!((k[2] + 0.359).abs() < 2e-3);
        let k = kurt(&lc, 2);
        assert_eq!(argmin(&k), 3, "{k:?}");
        let k = kurt(&sc, 0);
        assert_eq!(argmin(&k), 2, "{k:?}");
    }

    #[test]
    fn passthrough_only_reproduces_gaussian() {
        let v = diag(&[1.7, 0.7, 1.2, 0.9]);
        let spec = SubtractionSpec::new(e(2, 0), 1.0, 1.0, 2).unwrap();
        let s = SubtractedState::new(&v, &spec).unwrap();
        let m = ComplexSecondMoments::from_covariance(&v);
        for w in OperatorWord::all(2, 4) {
            let a = s.word_expectation(&w).unwrap();
            let b = gaussian_moment(&m, &w.to_ops(2).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    fn arb_two_mode() -> impl Strategy<Value = CovarianceMatrix<f64>> {
        (0.0f64..3.0, 0.0f64..3.0, 0.0f64..1.0, 0.0f64..6.3, 0.0f64..1.5).prop_map(|(s0, s1, th, ph, extra)| {
            let v = covariance_from_squeeze(&SqueezeSpec::from_f64(&[(s0 + extra, -s0), (s1, -s1)]).unwrap());
            let (c, s) = (th.cos(), th.sin());
            let u = DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex::new(c, 0.0),
                    Complex::from_polar(s, ph),
                    Complex::from_polar(-s, -ph),
                    Complex::new(c, 0.0),
                ],
            );
            let t = crate::mode_basis::ModeTransform::new(u, "rand").unwrap();
            crate::gaussian::change_basis(&v, &t).unwrap()
        })
    }

    proptest! {
        #[test]
        fn hermiticity(v in arb_two_mode(), idx in 0usize..256) {
            let m = ComplexSecondMoments::from_covariance(&v);
            let w = &OperatorWord::all(2, 4)[idx];
            let a = gaussian_moment(&m, &w.to_ops(2).unwrap()).unwrap();
            let b = gaussian_moment(&m, &w.adjoint().to_ops(2).unwrap()).unwrap();
            prop_assert!(cabs(a - b.conj()) < 1e-12);
        }

        #[test]
        fn gaussian_kurtosis_nonnegative(v in arb_two_mode(), re in -1.0f64..1.0, im in -1.0f64..1.0) {
            let u = CoefficientVector::from_f64_pairs(&[(1.0, 0.0), (re, im)]).unwrap();
            prop_assert!(gaussian_excess_kurtosis(&v, &u).unwrap() >= -1e-9);
        }
    }
}
