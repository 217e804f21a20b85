//! Single-mode maximum-likelihood tomography from homodyne records.
//!
//! Detector loss is folded into the measurement operators: the operator of
//! outcome `(θ, x)` at efficiency `η` is
//!
//! ```text
//! Π = Σ_k E_k† |x_θ⟩⟨x_θ| E_k,   E_k = Σ_n e_{k,n} |n-k⟩⟨n|
//! e_{k,n} = sqrt(C(n,k) (1-η)^k η^(n-k))
//! ```
//!
//! so the reconstruction targets the state before the loss. The iteration
//! is the usual `ρ ← N[R ρ R]`; when a step would lower the likelihood it
//! falls back to the diluted form `R → (I + εR)/(1 + ε)` with halving `ε`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{fidelity, FockDensity};
use crate::homodyne::{wavefunctions, QuadratureDataset};
use crate::scalar::{to_f64, Real};

pub const MIN_CUTOFF: usize = 5;
/// Probabilities are floored here so an operator the current iterate misses
/// does not divide by zero.
const PROB_FLOOR: f64 = 1e-300;
const MAX_DILUTIONS: usize = 40;

/// Grouping of the records into measurement operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Binning {
    /// `phase_bins` equal sectors of `[0, 2π)` times `x` bins of `x_width`;
    /// each occupied bin is represented at the mean of its records.
    Binned { phase_bins: usize, x_width: f64 },
    /// One operator per record.
    Unbinned,
}

impl Default for Binning {
    fn default() -> Self {
        Binning::Binned { phase_bins: 30, x_width: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    pub cutoff: usize,
    /// Efficiency assumed in the measurement operators.
    pub eta: f64,
    pub max_iters: usize,
    /// Stop when the mean log-likelihood gains less than this per iteration.
    pub tolerance: f64,
    pub binning: Binning,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            cutoff: 10,
            eta: 1.0,
            max_iters: 5000,
            tolerance: 1e-10,
            binning: Binning::default(),
        }
    }
}

impl TomographyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff < MIN_CUTOFF {
            return Err(Error::InvalidParameter(format!("tomography cutoff {} below {MIN_CUTOFF}", self.cutoff)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("efficiency {} outside (0, 1]", self.eta)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if let Binning::Binned { phase_bins, x_width } = self.binning {
            if phase_bins == 0 || !(x_width > 0.0) {
                return Err(Error::InvalidParameter("binning needs at least one phase bin and a positive width".into()));
            }
        }
        Ok(())
    }
}

/// Measurement operators with their record counts.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    dim: usize,
    /// Row-major `d × d` blocks.
    operators: Vec<Vec<Complex<f64>>>,
    counts: Vec<f64>,
    total: f64,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn build(data: &QuadratureDataset, cutoff: usize, eta: f64, binning: Binning) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DegenerateData("empty dataset".into()));
        }
        let points: Vec<(f64, f64, f64)> = match binning {
            Binning::Unbinned => data.records.iter().map(|&(t, x)| (t, x, 1.0)).collect(),
            Binning::Binned { phase_bins, x_width } => bin_records(&data.records, phase_bins, x_width),
        };
        let weights = loss_weights(cutoff, eta);
        let operators: Vec<Vec<Complex<f64>>> = points
            .par_iter()
            .map(|&(t, x, _)| povm_element(cutoff, t, x, &weights))
            .collect();
        let counts: Vec<f64> = points.iter().map(|p| p.2).collect();
        let total = counts.iter().sum();
        Ok(Self { dim: cutoff, operators, counts, total })
    }

    /// `tr(ρ Π_j)` for every operator.
    pub fn probabilities(&self, rho: &DMatrix<Complex<f64>>) -> Vec<f64> {
        let d = self.dim;
        self.operators
            .iter()
            .map(|op| {
                let mut acc = 0.0;
                for m in 0..d {
                    for n in 0..d {
                        // ρ_mn Π_nm
                        acc += (rho[(m, n)] * op[n * d + m]).re;
                    }
                }
                acc.max(PROB_FLOOR)
            })
            .collect()
    }

    /// Mean log-likelihood per record.
    pub fn log_likelihood(&self, probs: &[f64]) -> f64 {
        self.counts.iter().zip(probs).map(|(c, p)| c * p.ln()).sum::<f64>() / self.total
    }

    fn r_operator(&self, probs: &[f64]) -> DMatrix<Complex<f64>> {
        let d = self.dim;
        let mut r = DMatrix::from_element(d, d, Complex::new(0.0, 0.0));
        for ((op, c), p) in self.operators.iter().zip(&self.counts).zip(probs) {
            let f = c / (p * self.total);
            for m in 0..d {
                for n in 0..d {
                    r[(m, n)] += op[m * d + n] * f;
                }
            }
        }
        hermitize(&r)
    }
}

/// `(mean θ, mean x, count)` per occupied bin, in a deterministic order.
fn bin_records(records: &[(f64, f64)], phase_bins: usize, x_width: f64) -> Vec<(f64, f64, f64)> {
    let sector = 2.0 * PI / phase_bins as f64;
    // (sin θ sum, cos θ sum, x sum, count)
    let mut bins: BTreeMap<(usize, i64), (f64, f64, f64, f64)> = BTreeMap::new();
    for &(t, x) in records {
        let tw = t.rem_euclid(2.0 * PI);
        let key = (((tw / sector) as usize).min(phase_bins - 1), (x / x_width).floor() as i64);
        let e = bins.entry(key).or_insert((0.0, 0.0, 0.0, 0.0));
        e.0 += tw.sin();
        e.1 += tw.cos();
        e.2 += x;
        e.3 += 1.0;
    }
    bins.values().map(|&(s, c, x, n)| (s.atan2(c), x / n, n)).collect()
}

/// `e_{k,n}` for `n, k < d`.
fn loss_weights(d: usize, eta: f64) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; d]; d];
    for n in 0..d {
        let mut lc = 0.0f64; // ln C(n, k)
        for k in 0..=n {
            if k > 0 {
                lc += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            w[k][n] = if eta == 1.0 {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (0.5 * (lc + k as f64 * (1.0 - eta).ln() + (n - k) as f64 * eta.ln())).exp()
            };
        }
    }
    w
}

/// Row-major lossy projector of outcome `(θ, x)`.
fn povm_element(d: usize, theta: f64, x: f64, weights: &[Vec<f64>]) -> Vec<Complex<f64>> {
    let psi = wavefunctions(d, x);
    let v: Vec<Complex<f64>> = (0..d).map(|n| Complex::from_polar(psi[n], theta * n as f64)).collect();
    let mut op = vec![Complex::new(0.0, 0.0); d * d];
    for (k, wk) in weights.iter().enumerate() {
        if wk.iter().all(|&e| e == 0.0) {
            continue;
        }
        for m in k..d {
            let a = v[m - k] * wk[m];
            for n in k..d {
                op[m * d + n] += a * (v[n - k] * wk[n]).conj();
            }
        }
    }
    op
}

fn hermitize(m: &DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
    (m + m.adjoint()).scale(0.5)
}

fn normalized(m: DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
    let h = hermitize(&m);
    let t = h.trace().re;
    h.unscale(t)
}

/// Reconstructed state and the run's history.
#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub state: FockDensity<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Mean log-likelihood of the start and of every accepted iterate.
    pub log_likelihood: Vec<f64>,
    pub operators: usize,
    /// Steps that needed the diluted update.
    pub diluted_steps: usize,
}

/// Maximum-likelihood estimate of the pre-loss state. A run that hits
/// `max_iters` returns its last iterate with `converged = false`.
pub fn reconstruct(data: &QuadratureDataset, cfg: &TomographyConfig) -> Result<TomographyResult> {
    cfg.validate()?;
    let set = MeasurementSet::build(data, cfg.cutoff, cfg.eta, cfg.binning)?;
    let d = cfg.cutoff;
    let eye = DMatrix::<Complex<f64>>::identity(d, d);
    let mut rho = eye.unscale(d as f64);
    let mut probs = set.probabilities(&rho);
    let mut ll = set.log_likelihood(&probs);
    let mut history = vec![ll];
    let mut converged = false;
    let mut diluted_steps = 0;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let r = set.r_operator(&probs);
        let mut cand = normalized(&r * &rho * &r);
        let mut cand_probs = set.probabilities(&cand);
        let mut cand_ll = set.log_likelihood(&cand_probs);
        if cand_ll < ll {
            diluted_steps += 1;
            let mut eps = 1.0;
            let mut found = false;
            for _ in 0..MAX_DILUTIONS {
                let g = (&eye + r.scale(eps)).unscale(1.0 + eps);
                cand = normalized(&g * &rho * &g);
                cand_probs = set.probabilities(&cand);
                cand_ll = set.log_likelihood(&cand_probs);
                if cand_ll >= ll {
                    found = true;
                    break;
                }
                eps *= 0.5;
            }
            if !found {
                // no ascent direction left at this precision
                converged = true;
                break;
            }
        }
        let gain = cand_ll - ll;
        rho = cand;
        probs = cand_probs;
        ll = cand_ll;
        history.push(ll);
        if gain < cfg.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("tomography stopped after {iterations} iterations without reaching tolerance {:.1e}", cfg.tolerance);
    }
    Ok(TomographyResult {
        state: FockDensity::new(&[d], rho)?,
        converged,
        iterations,
        log_likelihood: history,
        operators: set.len(),
        diluted_steps,
    })
}

/// Figures of merit of a single-mode state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    /// `2π W(0, 0)`.
    pub w0: f64,
    pub purity: f64,
    /// Phase-averaged excess kurtosis from the Fock moments.
    pub excess_kurtosis: f64,
    /// Uhlmann fidelity with the reference, when one is given.
    pub fidelity: Option<f64>,
}

pub fn report_observables<T: Real>(rho: &FockDensity<T>, reference: Option<&FockDensity<T>>) -> Result<Observables> {
    let (_, _, k) = rho.phase_averaged_kurtosis()?;
    let fidelity = match reference {
        None => None,
        Some(r) => {
            let d = rho.dims()[0].max(r.dims()[0]);
            Some(to_f64(fidelity(&rho.pad(&[d])?, &r.pad(&[d])?)?))
        }
    };
    Ok(Observables {
        w0: to_f64(rho.parity_w0()?),
        purity: to_f64(rho.purity()),
        excess_kurtosis: to_f64(k),
        fidelity,
    })
}

/// `tr(ρ Π)` of one lossy operator, for checks against the lossy density.
pub fn povm_probability<T: Real>(rho: &FockDensity<T>, theta: f64, x: f64, eta: f64) -> Result<f64> {
    if rho.modes() != 1 {
        return Err(Error::Dimension("expected a single-mode state".into()));
    }
    let d = rho.dims()[0];
    let op = povm_element(d, theta, x, &loss_weights(d, eta));
    let m = rho.matrix();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            acc += (Complex::new(to_f64(z.re), to_f64(z.im)) * op[j * d + i]).re;
        }
    }
    Ok(acc)
}
