//! Homodyne detection of single-mode states: quadrature densities, seeded
//! sampling and the finite-sample kurtosis estimator.
//!
//! The rotated quadrature is `x_θ = a e^{-iθ} + a† e^{iθ}`, so `θ = 0` is `x`
//! and `θ = π/2` is `p`. Its density is
//!
//! ```text
//! p_θ(x) = Σ_mn ρ_mn e^{-iθ(m-n)} ψ_m(x) ψ_n(x)
//! ```
//!
//! with oscillator eigenfunctions scaled to unit vacuum variance.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::wigner::max_quadrature_std;
use crate::fock::FockDensity;
use crate::mode_basis::CoefficientVector;
use crate::scalar::{lit, to_f64, Real};

/// Points of the inverse-CDF grid.
pub const SAMPLING_POINTS: usize = 4096;
/// Half width of the sampling grid in units of the largest quadrature std.
pub const SAMPLING_HALF_WIDTH: f64 = 8.0;
/// Phases available to the uniform schedule.
pub const PHASE_LATTICE: usize = 1024;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
/// Largest probability allowed outside a density grid.
pub const MASS_TOLERANCE: f64 = 1e-4;
pub const MIN_ESTIMATOR_SAMPLES: usize = 100;

/// `ψ_0 … ψ_{d-1}` at `x`, with `ψ_0 = (2π)^{-1/4} e^{-x²/4}`.
pub fn wavefunctions<T: Real>(d: usize, x: T) -> Vec<T> {
    let mut psi = Vec::with_capacity(d);
    if d == 0 {
        return psi;
    }
    let two_pi = lit::<T>(2.0 * PI);
    psi.push((-(x * x) / lit(4.0)).exp() / two_pi.sqrt().sqrt());
    if d > 1 {
        psi.push(x * psi[0]);
    }
    for n in 1..d.saturating_sub(1) {
        let nf = lit::<T>(n as f64);
        let next = (x * psi[n] - nf.sqrt() * psi[n - 1]) / (nf + T::one()).sqrt();
        psi.push(next);
    }
    psi
}

/// Fourier components of the quadrature density at fixed `x`:
/// `c_k = Σ_n ρ_{n+k,n} ψ_{n+k} ψ_n`, so `p_θ = c_0 + 2 Re Σ_k e^{-ikθ} c_k`.
fn harmonics<T: Real>(rho: &FockDensity<T>, x: T) -> Vec<Complex<T>> {
    let d = rho.dims()[0];
    let psi = wavefunctions(d, x);
    let m = rho.matrix();
    (0..d)
        .map(|k| {
            (0..d - k).fold(Complex::new(T::zero(), T::zero()), |acc, n| {
                acc + m[(n + k, n)].scale(psi[n + k] * psi[n])
            })
        })
        .collect()
}

fn density_from_harmonics<T: Real>(c: &[Complex<T>], theta: T) -> T {
    let mut p = c[0].re;
    for (k, ck) in c.iter().enumerate().skip(1) {
        let ang = theta * lit::<T>(k as f64);
        // Re(e^{-ikθ} c_k)
        p += lit::<T>(2.0) * (ck.re * ang.cos() + ck.im * ang.sin());
    }
    p
}

fn single_mode<T: Real>(rho: &FockDensity<T>) -> Result<()> {
    if rho.modes() != 1 {
        return Err(Error::Dimension(format!("expected a single-mode state, got {} modes", rho.modes())));
    }
    Ok(())
}

/// Quadrature density sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDensity<T: Real> {
    pub theta: T,
    pub xs: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> QuadratureDensity<T> {
    /// Trapezoid rule over the grid.
    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        let mut acc = T::zero();
        for i in 1..self.xs.len() {
            let h = self.xs[i] - self.xs[i - 1];
            acc += h * lit::<T>(0.5) * (f(self.xs[i]) * self.values[i] + f(self.xs[i - 1]) * self.values[i - 1]);
        }
        acc
    }

    pub fn mass(&self) -> T {
        self.integrate(|_| T::one())
    }

    pub fn mean(&self) -> T {
        self.integrate(|x| x)
    }

    pub fn variance(&self) -> T {
        let mu = self.mean();
        self.integrate(|x| (x - mu) * (x - mu))
    }

    /// Linear interpolation, zero outside the grid.
    pub fn value_at(&self, x: T) -> T {
        let i = self.xs.partition_point(|&g| g <= x);
        if i == 0 || i == self.xs.len() {
            return T::zero();
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let t = (x - x0) / (x1 - x0);
        self.values[i - 1] * (T::one() - t) + self.values[i] * t
    }
}

/// `p_θ(x)` on an increasing grid. Fails if more than [`MASS_TOLERANCE`] of
/// the probability falls outside the grid.
pub fn quadrature_pdf<T: Real>(rho: &FockDensity<T>, theta: T, xs: &[T]) -> Result<QuadratureDensity<T>> {
    single_mode(rho)?;
    if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("quadrature grid needs at least two increasing points".into()));
    }
    let values: Vec<T> = xs.iter().map(|&x| density_from_harmonics(&harmonics(rho, x), theta)).collect();
    let out = QuadratureDensity { theta, xs: xs.to_vec(), values };
    let lost = to_f64(rho.trace() - out.mass());
    if lost.abs() > MASS_TOLERANCE {
        return Err(Error::Grid(format!(
            "grid [{}, {}] misses {lost:.2e} of the quadrature probability",
            to_f64(xs[0]),
            to_f64(xs[xs.len() - 1])
        )));
    }
    Ok(out)
}

/// `n` evenly spaced points on `[-half, half]`.
pub fn symmetric_grid<T: Real>(half: T, n: usize) -> Vec<T> {
    let step = lit::<T>(2.0) * half / lit::<T>((n.max(2) - 1) as f64);
    (0..n.max(2)).map(|i| -half + step * lit::<T>(i as f64)).collect()
}

/// Phase schedule of a homodyne run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseSchedule {
    /// Record `i` uses `phases[i % len]`.
    Fixed { phases: Vec<f64> },
    /// Independent uniform phases on a lattice of [`PHASE_LATTICE`] points.
    Uniform,
}

impl PhaseSchedule {
    fn validate(&self) -> Result<()> {
        match self {
            PhaseSchedule::Fixed { phases } if phases.is_empty() => {
                Err(Error::InvalidParameter("fixed phase schedule is empty".into()))
            }
            PhaseSchedule::Fixed { phases } if phases.iter().any(|p| !p.is_finite()) => {
                Err(Error::InvalidParameter("non-finite phase in schedule".into()))
            }
            _ => Ok(()),
        }
    }

    fn phases(&self) -> Vec<f64> {
        match self {
            PhaseSchedule::Fixed { phases } => phases.clone(),
            PhaseSchedule::Uniform => (0..PHASE_LATTICE).map(|j| 2.0 * PI * j as f64 / PHASE_LATTICE as f64).collect(),
        }
    }
}

/// Homodyne records `(θ, x)` of one measurement mode.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDataset {
    pub records: Vec<(f64, f64)>,
    pub mode: CoefficientVector<f64>,
    pub efficiency: f64,
    pub seed: u64,
    pub source: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetMeta {
    samples: usize,
    mode: Vec<[f64; 2]>,
    efficiency: f64,
    seed: u64,
    source: String,
}

impl QuadratureDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.1)
    }

    /// Sidecar path used by [`Self::write_csv`]: same stem, `.json`.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// `theta,x` rows plus a JSON sidecar with the metadata. Returns the
    /// sidecar path.
    pub fn write_csv(&self, path: &Path) -> Result<PathBuf> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["theta", "x"]).map_err(csv_err)?;
        for (t, x) in &self.records {
            w.write_record([format!("{t:.17e}"), format!("{x:.17e}")]).map_err(csv_err)?;
        }
        w.flush()?;
        let meta = DatasetMeta {
            samples: self.len(),
            mode: self.mode.entries().iter().map(|z| [z.re, z.im]).collect(),
            efficiency: self.efficiency,
            seed: self.seed,
            source: self.source.clone(),
        };
        let side = Self::sidecar_path(path);
        let mut f = BufWriter::new(File::create(&side)?);
        serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| Error::Format(e.to_string()))?;
        f.write_all(b"\n")?;
        Ok(side)
    }

    /// Reads `theta,x` rows. Without a sidecar the data is taken as an
    /// ideal-efficiency single-mode measurement.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.len() != 2 || &headers[0] != "theta" || &headers[1] != "x" {
            return Err(Error::Format(format!("{}: expected header `theta,x`", path.display())));
        }
        let mut records = Vec::new();
        for (line, row) in r.records().enumerate() {
            let row = row.map_err(csv_err)?;
            let parse = |s: &str| -> Result<f64> {
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("{}: row {}: `{s}` is not a number", path.display(), line + 2)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Format(format!("{}: row {}: non-finite value", path.display(), line + 2)))
                }
            };
            records.push((parse(&row[0])?, parse(&row[1])?));
        }
        let side = Self::sidecar_path(path);
        let (mode, efficiency, seed, source) = if side.exists() {
            let meta: DatasetMeta = serde_json::from_reader(BufReader::new(File::open(&side)?))
                .map_err(|e| Error::Format(format!("{}: {e}", side.display())))?;
            if meta.samples != records.len() {
                return Err(Error::Format(format!(
                    "{}: sidecar announces {} samples, found {}",
                    path.display(),
                    meta.samples,
                    records.len()
                )));
            }
            let mode = CoefficientVector::new(meta.mode.iter().map(|p| Complex::new(p[0], p[1])).collect())?;
            (mode, meta.efficiency, meta.seed, meta.source)
        } else {
            (CoefficientVector::basis_vector(1, 0)?, 1.0, 0, path.display().to_string())
        };
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::Format(format!("efficiency {efficiency} outside (0, 1]")));
        }
        Ok(Self { records, mode, efficiency, seed, source })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Piecewise-linear inverse of a tabulated CDF.
struct InverseCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn new(xs: &[f64], pdf: &[f64]) -> Result<Self> {
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        for i in 1..xs.len() {
            let h = xs[i] - xs[i - 1];
            let step = 0.5 * h * (pdf[i].max(0.0) + pdf[i - 1].max(0.0));
            cdf.push(cdf[i - 1] + step);
        }
        let total = cdf[cdf.len() - 1];
        if (1.0 - total).abs() > MASS_TOLERANCE {
            return Err(Error::Grid(format!("sampling grid holds {total:.6} of the probability")));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { xs: xs.to_vec(), cdf })
    }

    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[i - 1] + t * (self.xs[i] - self.xs[i - 1])
    }
}

/// Single-mode state seen by a detector looking at `mode`.
fn measured_state<T: Real>(state: &FockDensity<T>, mode: &CoefficientVector<T>) -> Result<FockDensity<T>> {
    if state.modes() == 1 {
        return Ok(state.clone());
    }
    let hit: Vec<usize> = (0..mode.len()).filter(|&k| mode.entries()[k].norm_sqr() > lit(1e-24)).collect();
    let exact = hit.len() == 1 && (mode.entries()[hit[0]] - Complex::new(T::one(), T::zero())).norm_sqr() < lit(1e-20);
    if !exact || hit[0] >= state.modes() {
        return Err(Error::UnsupportedBasis {
            name: "superposition measurement on a multimode Fock state (reduce it first)".into(),
            modes: state.modes(),
        });
    }
    state.partial_trace(&hit)
}

/// Simulated homodyne run of `samples` records with detection efficiency
/// `eta`. `state` is either already reduced to `mode` or a multimode state
/// in which `mode` is one of the modes. Record `i` draws from its own
/// ChaCha8 stream `i` under `seed`, so the output does not depend on
/// scheduling.
pub fn sample<T: Real>(
    state: &FockDensity<T>,
    mode: &CoefficientVector<T>,
    schedule: &PhaseSchedule,
    samples: usize,
    eta: f64,
    seed: u64,
) -> Result<QuadratureDataset> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("efficiency {eta} outside (0, 1]")));
    }
    schedule.validate()?;
    let rho = measured_state(state, mode)?.apply_loss(lit::<T>(eta))?;
    let half = SAMPLING_HALF_WIDTH * max_quadrature_std(&rho)?;
    let xs: Vec<f64> = symmetric_grid(half, SAMPLING_POINTS);
    let harm: Vec<Vec<Complex<f64>>> = xs
        .par_iter()
        .map(|&x| {
            harmonics(&rho, lit::<T>(x))
                .into_iter()
                .map(|z| Complex::new(to_f64(z.re), to_f64(z.im)))
                .collect()
        })
        .collect();
    let phases = schedule.phases();
    let cdfs: Vec<InverseCdf> = phases
        .par_iter()
        .map(|&th| {
            let pdf: Vec<f64> = harm.iter().map(|c| density_from_harmonics(c, th)).collect();
            InverseCdf::new(&xs, &pdf)
        })
        .collect::<Result<_>>()?;

    let records = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let j = match schedule {
                PhaseSchedule::Fixed { phases } => i % phases.len(),
                PhaseSchedule::Uniform => rng.random_range(0..PHASE_LATTICE),
            };
            (phases[j], cdfs[j].invert(rng.random::<f64>()))
        })
        .collect();
    let mode = CoefficientVector::new(
        mode.entries()
            .iter()
            .map(|z| Complex::new(to_f64(z.re), to_f64(z.im)))
            .collect(),
    )?;
    Ok(QuadratureDataset {
        records,
        mode,
        efficiency: eta,
        seed,
        source: "simulated".into(),
    })
}

/// Point estimate and bootstrap standard error of the excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KurtosisEstimate {
    pub excess_kurtosis: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub resamples: usize,
}

impl KurtosisEstimate {
    /// `|K - target| / se`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.excess_kurtosis - target).abs() / self.standard_error
    }
}

/// `(1/S Σx⁴) / (1/S Σx²)² - 3`.
pub fn excess_kurtosis(xs: &[f64]) -> Result<f64> {
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), &x| {
        let x2 = x * x;
        (a + x2, b + x2 * x2)
    });
    if !(m2 > 0.0) {
        return Err(Error::DegenerateData("all quadrature samples are zero".into()));
    }
    let s = xs.len() as f64;
    Ok((m4 / s) / (m2 / s).powi(2) - 3.0)
}

/// Kurtosis estimate with a nonparametric bootstrap of `resamples` draws,
/// resample `b` using ChaCha8 stream `b` under `seed`.
pub fn kurtosis_estimate(data: &QuadratureDataset, resamples: usize, seed: u64) -> Result<KurtosisEstimate> {
    let xs: Vec<f64> = data.xs().collect();
    if xs.len() < MIN_ESTIMATOR_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "{} samples; the estimator needs at least {MIN_ESTIMATOR_SAMPLES}",
            xs.len()
        )));
    }
    if resamples < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least two resamples".into()));
    }
    let k = excess_kurtosis(&xs)?;
    let n = xs.len();
    let boot: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let (mut m2, mut m4) = (0.0, 0.0);
            for _ in 0..n {
                let x2 = xs[rng.random_range(0..n)].powi(2);
                m2 += x2;
                m4 += x2 * x2;
            }
            // a resample of nonzero data can still be all zeros
            if m2 > 0.0 {
                (m4 / n as f64) / (m2 / n as f64).powi(2) - 3.0
            } else {
                f64::NAN
            }
        })
        .collect();
    let ok: Vec<f64> = boot.into_iter().filter(|v| v.is_finite()).collect();
    if ok.len() < 2 {
        return Err(Error::DegenerateData("bootstrap resamples are degenerate".into()));
    }
    let mean = ok.iter().sum::<f64>() / ok.len() as f64;
    let var = ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ok.len() - 1) as f64;
    Ok(KurtosisEstimate {
        excess_kurtosis: k,
        standard_error: var.sqrt(),
        samples: n,
        resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{gaussian_to_fock, subtract_gaussian};
    use crate::gaussian::CovarianceMatrix;
    use crate::subtraction::ideal_spec;
    use nalgebra::{DMatrix, DVector};

    fn sq(vx: f64, vp: f64, d: usize) -> FockDensity<f64> {
        let v = CovarianceMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(&[vx, vp]))).unwrap();
        gaussian_to_fock(&v, d).unwrap()
    }

    fn photon(vx: f64, vp: f64) -> FockDensity<f64> {
        let v = CovarianceMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(&[vx, vp]))).unwrap();
        let spec = ideal_spec(CoefficientVector::basis_vector(1, 0).unwrap());
        subtract_gaussian(&v, &spec, None, 30, 1e-4).unwrap().0
    }

    fn e0() -> CoefficientVector<f64> {
        CoefficientVector::basis_vector(1, 0).unwrap()
    }

    #[test]
    fn wavefunctions_are_orthonormal() {
        let xs = symmetric_grid(14.0, 4001);
        let h = xs[1] - xs[0];
        let psi: Vec<Vec<f64>> = xs.iter().map(|&x| wavefunctions(12, x)).collect();
        for m in 0..12 {
            for n in 0..12 {
                let s: f64 = psi.iter().map(|p| p[m] * p[n]).sum::<f64>() * h;
                assert!((s - if m == n { 1.0 } else { 0.0 }).abs() < 1e-10, "{m} {n} {s}");
            }
        }
    }

    #[test]
    fn vacuum_density() {
        let vac = FockDensity::<f64>::number_state(10, 0).unwrap();
        let xs = symmetric_grid(10.0, 2001);
        for th in [0.0, 0.7, 2.0] {
            let q = quadrature_pdf(&vac, th, &xs).unwrap();
            assert!((q.mass() - 1.0).abs() < 1e-6);
            assert!((q.variance() - 1.0).abs() < 1e-8);
            let x: f64 = 0.4;
            let want = (-(x * x) / 2.0).exp() / (2.0 * PI).sqrt();
            assert!((q.value_at(x) - want).abs() < 1e-4);
        }
    }

    #[test]
    fn squeezed_density() {
        let r = sq(2.0, 0.5, 30);
        let xs = symmetric_grid(14.0, 2801);
        assert!((quadrature_pdf(&r, 0.0, &xs).unwrap().variance() - 2.0).abs() < 1e-6);
        let qp = quadrature_pdf(&r, PI / 2.0, &xs).unwrap();
        assert!((qp.variance() - 0.5).abs() < 1e-6);
        assert!(qp.values.iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn squeezed_photon_density() {
        let r = photon(2.0, 0.5);
        let xs = symmetric_grid(16.0, 3201);
        let q = quadrature_pdf(&r, 0.0, &xs).unwrap();
        assert!((q.variance() - 6.0).abs() < 1e-5, "{}", q.variance());
        assert!(q.value_at(0.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_mean() {
        // (|0> + i|1>)/√2 has <a> = i/2: <x> = 0, <p> = 1
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = FockDensity::from_pure(&[4], &[Complex::new(s, 0.0), Complex::new(0.0, s), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)])
            .unwrap();
        let xs = symmetric_grid(10.0, 2001);
        assert!(quadrature_pdf(&r, 0.0, &xs).unwrap().mean().abs() < 1e-9);
        assert!((quadrature_pdf(&r, PI / 2.0, &xs).unwrap().mean() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn narrow_grid_rejected() {
        let r = sq(2.0, 0.5, 30);
        let xs = symmetric_grid(2.0, 400);
        assert!(matches!(quadrature_pdf(&r, 0.0, &xs), Err(Error::Grid(_))));
    }

    fn sample_variance(d: &QuadratureDataset) -> (f64, f64) {
        let n = d.len() as f64;
        let xs: Vec<f64> = d.xs().collect();
        let mu = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = xs.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / n;
        // se of the sample variance
        (var, ((m4 - var * var) / n).sqrt())
    }

    #[test]
    fn vacuum_samples() {
        let vac = FockDensity::<f64>::number_state(10, 0).unwrap();
        let d = sample(&vac, &e0(), &PhaseSchedule::Fixed { phases: vec![0.0] }, 100_000, 1.0, 1).unwrap();
        let (v, se) = sample_variance(&d);
        assert!((v - 1.0).abs() < 3.0 * se, "{v} ± {se}");
        let k = kurtosis_estimate(&d, 200, 1).unwrap();
        assert!(k.z_score(0.0) < 3.0, "{k:?}");
    }

    #[test]
    fn squeezed_samples_and_determinism() {
        let r = sq(2.0, 0.5, 30);
        let fixed = PhaseSchedule::Fixed { phases: vec![0.0] };
        let d = sample(&r, &e0(), &fixed, 100_000, 1.0, 11).unwrap();
        let (v, se) = sample_variance(&d);
        assert!((v - 2.0).abs() < 3.0 * se, "{v} ± {se}");
        let again = sample(&r, &e0(), &fixed, 100_000, 1.0, 11).unwrap();
        assert_eq!(d, again);
        let other = sample(&r, &e0(), &fixed, 100, 1.0, 12).unwrap();
        assert_ne!(d.records[..100], other.records[..]);
        // a prefix of a longer run is the shorter run
        let short = sample(&r, &e0(), &fixed, 1000, 1.0, 11).unwrap();
        assert_eq!(short.records[..], d.records[..1000]);
    }

    #[test]
    fn gaussian_kurtosis_is_nonnegative() {
        let r = sq(2.0, 0.5, 30);
        let d = sample(&r, &e0(), &PhaseSchedule::Uniform, 100_000, 1.0, 3).unwrap();
        let k = kurtosis_estimate(&d, 200, 4).unwrap();
        // phase-averaged Gaussian value is 0.54
        assert!(k.excess_kurtosis > -3.0 * k.standard_error);
        assert!(k.z_score(0.54) < 3.0, "{k:?}");
    }

    #[test]
    fn subtracted_kurtosis_from_samples() {
        let d = sample(&photon(2.0, 0.5), &e0(), &PhaseSchedule::Uniform, 30_000, 1.0, 5).unwrap();
        let k = kurtosis_estimate(&d, DEFAULT_BOOTSTRAP, 6).unwrap();
        assert!(k.z_score(-1.0333) < 3.0, "{k:?}");
        assert!(k.standard_error > 0.0 && k.standard_error < 0.05);
    }

    #[test]
    fn loss_commutes_with_gaussian_map() {
        let eta = 0.875;
        let lossy = sample(&sq(2.0, 0.5, 30), &e0(), &PhaseSchedule::Fixed { phases: vec![0.0] }, 50_000, eta, 9).unwrap();
        let (v, se) = sample_variance(&lossy);
        let want = eta * 2.0 + (1.0 - eta);
        assert!((v - want).abs() < 3.0 * se, "{v} vs {want} ± {se}");
    }

    #[test]
    fn estimator_arithmetic() {
        let d = QuadratureDataset {
            records: (0..200).map(|i| (0.0, if i % 2 == 0 { 1.0 } else { -1.0 })).collect(),
            mode: e0(),
            efficiency: 1.0,
            seed: 0,
            source: "test".into(),
        };
        let k = kurtosis_estimate(&d, 50, 0).unwrap();
        assert!((k.excess_kurtosis + 2.0).abs() < 1e-14);
        let zeros = QuadratureDataset { records: vec![(0.0, 0.0); 200], ..d.clone() };
        assert!(matches!(kurtosis_estimate(&zeros, 50, 0), Err(Error::DegenerateData(_))));
        let few = QuadratureDataset { records: vec![(0.0, 1.0); 20], ..d };
        assert!(kurtosis_estimate(&few, 50, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("mpsub-hd-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("data.csv");
        let r = sq(2.0, 0.5, 20);
        let d = sample(&r, &e0(), &PhaseSchedule::Uniform, 500, 0.9, 2).unwrap();
        let side = d.write_csv(&path).unwrap();
        assert!(side.ends_with("data.json"));
        assert_eq!(QuadratureDataset::read_csv(&path).unwrap(), d);
        std::fs::remove_file(&side).unwrap();
        let bare = QuadratureDataset::read_csv(&path).unwrap();
        assert_eq!(bare.records, d.records);
        assert_eq!(bare.efficiency, 1.0);
        std::fs::write(&path, "theta,x\n0.0,nan\n").unwrap();
        assert!(matches!(QuadratureDataset::read_csv(&path), Err(Error::Format(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn multimode_input_needs_plain_mode() {
        let v = CovarianceMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 0.5, 1.0, 1.0]))).unwrap();
        let r = gaussian_to_fock(&v, 10).unwrap();
        let fixed = PhaseSchedule::Fixed { phases: vec![0.0] };
        assert!(sample(&r, &CoefficientVector::basis_vector(2, 1).unwrap(), &fixed, 10, 1.0, 0).is_ok());
        let sup = CoefficientVector::from_f64_pairs(&[(0.6, 0.0), (0.8, 0.0)]).unwrap();
        assert!(matches!(sample(&r, &sup, &fixed, 10, 1.0, 0), Err(Error::UnsupportedBasis { .. })));
    }
}
