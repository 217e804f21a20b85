//! Heralded single-photon subtraction.
//!
//! The realistic channel is
//!
//! ```text
//! R[ρ] = w0 ρ + (1 - w0) [ α A ρ A† + β Σ_k a_k ρ a_k† ]
//! α = (N p0 - 1)/(N - 1),  β = (1 - p0)/(N - 1)
//! ```
//!
//! with `A = Σ c_k a_k`. `w0` weights false heralds (dark counts and
//! background), `p0` is the probability that the heralded photon came from
//! the intended mode and the sum runs over the `N` background modes. The
//! channel is kept symbolic; consumers evaluate each term on their own state
//! representation and divide by the trace.

use crate::error::{Error, Result};
use crate::mode_basis::CoefficientVector;
use crate::scalar::{lit, tol, Real};

/// Lab channel: false-herald weight.
pub const LAB_W0: f64 = 0.0094;
/// Lab channel: mode-selectivity probability.
pub const LAB_P0: f64 = 0.95;
/// Lab channel: number of background modes.
pub const LAB_N: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SubtractionSpec<T: Real> {
    c: CoefficientVector<T>,
    w0: T,
    p0: T,
    background_modes: usize,
}

impl<T: Real> SubtractionSpec<T> {
    pub fn new(c: CoefficientVector<T>, w0: T, p0: T, background_modes: usize) -> Result<Self> {
        let unit = |name: &str, v: T| {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")))
            }
        };
        unit("w0", w0)?;
        unit("p0", p0)?;
        if background_modes == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if background_modes == 1 && (p0 - T::one()).abs() > tol::<T>(1e-12) {
            return Err(Error::InvalidParameter("with N = 1 the channel needs p0 = 1".into()));
        }
        let np0 = lit::<T>(background_modes as f64) * p0;
        if np0 < T::one() - tol::<T>(1e-12) {
            return Err(Error::InvalidParameter(format!(
                "N·p0 = {np0} < 1 gives the coherent term a negative weight"
            )));
        }
        Ok(Self { c, w0, p0, background_modes })
    }

    pub fn c(&self) -> &CoefficientVector<T> {
        &self.c
    }

    pub fn w0(&self) -> T {
        self.w0
    }

    pub fn p0(&self) -> T {
        self.p0
    }

    pub fn background_modes(&self) -> usize {
        self.background_modes
    }

    /// `(α, β)` of the subtraction part.
    pub fn alpha_beta(&self) -> (T, T) {
        let n = self.background_modes;
        if n == 1 {
            return (T::one(), T::zero());
        }
        let nf = lit::<T>(n as f64);
        let d = nf - T::one();
        ((nf * self.p0 - T::one()) / d, (T::one() - self.p0) / d)
    }

    /// Unnormalized weight of the coherent term.
    pub fn coherent_weight(&self) -> T {
        (T::one() - self.w0) * self.alpha_beta().0
    }

    /// Unnormalized weight of each single-mode background term.
    pub fn incoherent_weight(&self) -> T {
        (T::one() - self.w0) * self.alpha_beta().1
    }

    /// `w0 + (1 - w0)(α + Nβ)`.
    pub fn total_weight(&self) -> T {
        let (a, b) = self.alpha_beta();
        self.w0 + (T::one() - self.w0) * (a + lit::<T>(self.background_modes as f64) * b)
    }

    pub fn is_ideal(&self) -> bool {
        self.w0 == T::zero() && self.p0 == T::one()
    }

    /// Nonzero terms of the channel, passthrough first, then coherent, then
    /// single-mode terms in mode order.
    pub fn channel_terms(&self) -> ChannelTerms<T> {
        let mut terms = Vec::new();
        if self.w0 > T::zero() {
            terms.push(ChannelTerm { weight: self.w0, kind: TermKind::Passthrough });
        }
        let cw = self.coherent_weight();
        if cw > T::zero() {
            terms.push(ChannelTerm { weight: cw, kind: TermKind::Coherent(self.c.clone()) });
        }
        let iw = self.incoherent_weight();
        if iw > T::zero() {
            for k in 0..self.background_modes {
                terms.push(ChannelTerm { weight: iw, kind: TermKind::SingleMode(k) });
            }
        }
        ChannelTerms { terms }
    }
}

/// Pure subtraction `ρ → AρA†`.
pub fn ideal_spec<T: Real>(c: CoefficientVector<T>) -> SubtractionSpec<T> {
    let n = c.len().max(1);
    SubtractionSpec { c, w0: T::zero(), p0: T::one(), background_modes: n }
}

/// The measured channel parameters `w0 = 0.0094`, `p0 = 0.95`, `N = 4`.
pub fn lab_spec<T: Real>(c: CoefficientVector<T>) -> SubtractionSpec<T> {
    SubtractionSpec::new(c, lit(LAB_W0), lit(LAB_P0), LAB_N).expect("lab parameters are valid")
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermKind<T: Real> {
    Passthrough,
    /// `AρA†` with the HG coefficients of `A`.
    Coherent(CoefficientVector<T>),
    /// `a_k ρ a_k†` on HG mode `k`.
    SingleMode(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTerm<T: Real> {
    pub weight: T,
    pub kind: TermKind<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTerms<T: Real> {
    pub terms: Vec<ChannelTerm<T>>,
}

impl<T: Real> ChannelTerms<T> {
    pub fn total_weight(&self) -> T {
        self.terms.iter().fold(T::zero(), |a, t| a + t.weight)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ChannelTerm<T>> {
        self.terms.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hg0() -> CoefficientVector<f64> {
        CoefficientVector::basis_vector(4, 0).unwrap()
    }

    #[test]
    fn ideal_examples() {
        let s = ideal_spec(hg0());
        assert!(s.is_ideal());
        let t = s.channel_terms();
        assert_eq!(t.len(), 1);
        assert!(matches!(t.terms[0].kind, TermKind::Coherent(_)));
        assert!((t.terms[0].weight - 1.0).abs() < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = ideal_spec(CoefficientVector::<f64>::from_f64_pairs(&[(1.0, 0.0), (0.0, -1.0)]).unwrap());
        assert!((s.c().entries()[1].im + h).abs() < 1e-15);
        let s = ideal_spec(CoefficientVector::<f64>::from_f64_pairs(&[(1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).unwrap());
        assert!((s.c().entries()[2].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lab_weights() {
        let s = lab_spec(hg0());
        assert!((s.coherent_weight() - 0.92456).abs() < 1e-5);
        assert!((s.incoherent_weight() - 0.016510).abs() < 1e-6);
        let t = s.channel_terms();
        assert_eq!(t.len(), 6);
        assert!(matches!(t.terms[0].kind, TermKind::Passthrough));
        assert!(matches!(t.terms[1].kind, TermKind::Coherent(_)));
        assert!(t.terms[2..].iter().all(|x| matches!(x.kind, TermKind::SingleMode(_))));
        assert!((t.total_weight() - s.total_weight()).abs() < 1e-15);
    }

    #[test]
    fn limits_and_boundaries() {
        let s = SubtractionSpec::new(hg0(), 0.0, 1.0, 4).unwrap();
        assert_eq!(s.channel_terms(), ideal_spec(hg0()).channel_terms());
        let s = SubtractionSpec::new(hg0(), 0.0, 0.25, 4).unwrap();
        let t = s.channel_terms();
        assert_eq!(t.len(), 4);
        assert!(t.iter().all(|x| matches!(x.kind, TermKind::SingleMode(_))));
        assert!(SubtractionSpec::new(hg0(), 0.0, 0.2, 4).is_err());
        assert!(SubtractionSpec::new(hg0(), 1.5, 1.0, 4).is_err());
        assert!(SubtractionSpec::new(hg0(), 0.0, 0.9, 1).is_err());
        assert!(SubtractionSpec::new(hg0(), 0.0, 0.9, 0).is_err());
    }

    #[test]
    fn weights_nonnegative_over_grid() {
        for n in 1..6 {
            for i in 0..=20 {
                let p0 = i as f64 / 20.0;
                if let Ok(s) = SubtractionSpec::new(hg0(), 0.3, p0, n) {
                    let (a, b) = s.alpha_beta();
                    assert!(a >= -1e-15 && b >= -1e-15);
                }
            }
        }
    }
}
