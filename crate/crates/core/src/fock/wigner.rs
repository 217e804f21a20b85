//! Wigner functions from Fock matrices.
//!
//! Normalization follows the quadrature convention of the crate: the vacuum is
//! `W(x, p) = exp(-(x² + p²)/2) / 2π` and `W0 = 2π W(0, 0)` equals the photon
//! number parity. Kernels use the three-term recursion over `|m⟩⟨n|`, which
//! stays stable at high photon number.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::FockDensity;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Required accuracy of the grid normalization.
pub const NORMALIZATION_TOL: f64 = 1e-3;

/// `K[(m, n)]` = Wigner function of `|m⟩⟨n|` at `(x, p)`, for levels `0..d`.
pub fn kernel<T: Real>(d: usize, x: T, p: T) -> DMatrix<Complex<T>> {
    let half = lit::<T>(0.5);
    let a = Complex::new(x * half, p * half);
    let two_a = a.scale(lit(2.0));
    let two_ac = two_a.conj();
    let sq: Vec<T> = (0..=d).map(|k| lit::<T>(k as f64).sqrt()).collect();
    let mut wl = DMatrix::from_element(d, d, Complex::new(T::zero(), T::zero()));
    let g = (-lit::<T>(2.0) * a.norm_sqr()).exp() / T::pi();
    wl[(0, 0)] = Complex::new(g, T::zero());
    for n in 1..d {
        wl[(0, n)] = (two_a * wl[(0, n - 1)]).unscale(sq[n]);
    }
    for m in 1..d {
        wl[(m, m)] = (two_ac * wl[(m - 1, m)] - wl[(m - 1, m - 1)].scale(sq[m])).unscale(sq[m]);
        for n in m + 1..d {
            wl[(m, n)] = (two_a * wl[(m, n - 1)] - wl[(m - 1, n - 1)].scale(sq[m])).unscale(sq[n]);
        }
    }
    DMatrix::from_fn(d, d, |m, n| if m <= n { wl[(m, n)].scale(half) } else { wl[(n, m)].conj().scale(half) })
}

/// Single-mode `W(x, p)`.
pub fn wigner_point<T: Real>(rho: &FockDensity<T>, x: T, p: T) -> Result<T> {
    if rho.modes() != 1 {
        return Err(Error::Dimension("wigner_point needs a single-mode state".into()));
    }
    let k = kernel(rho.dims()[0], x, p);
    Ok(contract(rho.matrix(), &k))
}

/// `Re Σ_mn ρ_mn K_mn`.
fn contract<T: Real>(rho: &DMatrix<Complex<T>>, k: &DMatrix<Complex<T>>) -> T {
    rho.iter().zip(k.iter()).fold(T::zero(), |acc, (r, kk)| acc + (*r * *kk).re)
}

/// Joint multimode Wigner function at one phase-space point per mode.
pub fn wigner_multimode<T: Real>(rho: &FockDensity<T>, points: &[(T, T)]) -> Result<T> {
    if points.len() != rho.modes() {
        return Err(Error::Dimension(format!("{} points for {} modes", points.len(), rho.modes())));
    }
    let ks: Vec<DMatrix<Complex<T>>> = points
        .iter()
        .zip(rho.dims())
        .map(|(&(x, p), &d)| kernel(d, x, p))
        .collect();
    Ok(product_contract(rho, &ks))
}

fn product_contract<T: Real>(rho: &FockDensity<T>, ks: &[DMatrix<Complex<T>>]) -> T {
    let l = rho.layout();
    let n = l.total();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            let mut k = Complex::new(T::one(), T::zero());
            for (mode, km) in ks.iter().enumerate() {
                k *= km[(l.digit(i, mode), l.digit(j, mode))];
            }
            acc += (rho.matrix()[(i, j)] * k).re;
        }
    }
    acc
}

/// Reduced Wigner function of mode `keep` at `(x, p)`, obtained by summing the
/// joint Wigner function over `grid` in every other mode.
pub fn integrated_marginal<T: Real>(rho: &FockDensity<T>, keep: usize, x: T, p: T, grid: &GridSpec) -> Result<T> {
    if keep >= rho.modes() {
        return Err(Error::Dimension(format!("mode {keep} out of range")));
    }
    let area = lit::<T>(grid.dx() * grid.dp());
    let ks: Vec<DMatrix<Complex<T>>> = rho
        .dims()
        .iter()
        .enumerate()
        .map(|(mode, &d)| {
            if mode == keep {
                return kernel(d, x, p);
            }
            // the joint function is linear in each kernel, so the grid sum
            // can be taken kernel by kernel
            let mut s = DMatrix::from_element(d, d, Complex::new(T::zero(), T::zero()));
            for xi in grid.xs() {
                for pi in grid.ps() {
                    s += kernel(d, lit::<T>(xi), lit::<T>(pi));
                }
            }
            s.scale(area)
        })
        .collect();
    Ok(product_contract(rho, &ks))
}

/// First mode whose reduced `W0` is negative. Such a state cannot be
/// Gaussian: every marginal of a nonnegative Wigner function is nonnegative.
pub fn negativity_witness<T: Real>(rho: &FockDensity<T>) -> Result<Option<(usize, T)>> {
    for k in 0..rho.modes() {
        let w0 = rho.partial_trace(&[k])?.parity_w0()?;
        if w0 < T::zero() {
            return Ok(Some((k, w0)));
        }
    }
    Ok(None)
}

/// Regular phase-space grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self { x_min: -half_width, x_max: half_width, nx: n, p_min: -half_width, p_max: half_width, np: n }
    }

    /// Square grid wide enough for `rho` (6 standard deviations of its widest
    /// quadrature, at least ±5) with step 0.05.
    pub fn auto<T: Real>(rho: &FockDensity<T>) -> Result<Self> {
        let sigma = max_quadrature_std(rho)?;
        let half = (6.0 * sigma).max(5.0).ceil();
        Ok(Self::square(half, (2.0 * half / 0.05).round() as usize + 1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 || !(self.x_max > self.x_min) || !(self.p_max > self.p_min) {
            return Err(Error::Grid(format!("degenerate grid {self:?}")));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nx).map(move |i| self.x_min + i as f64 * self.dx())
    }

    pub fn ps(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.np).map(move |i| self.p_min + i as f64 * self.dp())
    }
}

/// `sqrt(max_θ ⟨x_θ²⟩)` of a single-mode state.
pub fn max_quadrature_std<T: Real>(rho: &FockDensity<T>) -> Result<f64> {
    let d = rho.dims().first().copied().unwrap_or(0);
    if rho.modes() != 1 {
        return Err(Error::Dimension("expected a single-mode state".into()));
    }
    let m = rho.matrix();
    let (mut n, mut a2) = (0.0f64, Complex::new(0.0f64, 0.0));
    for k in 0..d {
        n += k as f64 * to_f64(m[(k, k)].re);
        if k + 2 < d {
            // ⟨a²⟩ = Σ ρ_{k+2,k} √((k+1)(k+2))
            let z = m[(k + 2, k)];
            a2 += Complex::new(to_f64(z.re), to_f64(z.im)) * (((k + 1) * (k + 2)) as f64).sqrt();
        }
    }
    Ok((2.0 * n + 1.0 + 2.0 * a2.norm()).sqrt())
}

/// Sampled single-mode Wigner function, row-major with `x` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// `2π W(0, 0)`, evaluated directly.
    pub w0: f64,
}

/// Evaluates and checks that the grid integral is 1 within 1e-3.
pub fn wigner<T: Real>(rho: &FockDensity<T>, spec: &GridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    if rho.modes() != 1 {
        return Err(Error::Dimension("wigner needs a single-mode state".into()));
    }
    let d = rho.dims()[0];
    let xs: Vec<f64> = spec.xs().collect();
    let ps: Vec<f64> = spec.ps().collect();
    use rayon::prelude::*;
    let values: Vec<f64> = xs
        .par_iter()
        .flat_map_iter(|&x| {
            ps.iter()
                .map(|&p| to_f64(contract(rho.matrix(), &kernel(d, lit::<T>(x), lit::<T>(p)))))
                .collect::<Vec<_>>()
        })
        .collect();
    let grid = WignerGrid {
        spec: *spec,
        w0: 2.0 * std::f64::consts::PI * to_f64(wigner_point(rho, T::zero(), T::zero())?),
        values,
    };
    let integral = grid.integral();
    if (integral - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Grid(format!(
            "grid integral {integral:.6} differs from 1 by more than {NORMALIZATION_TOL}; widen or refine the grid"
        )));
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerHeader {
    pub grid: GridSpec,
    pub w0: f64,
    /// Always `"f64-le"`.
    pub dtype: String,
    /// Always `"x-major"`: index `ix * np + ip`.
    pub order: String,
    pub data_file: String,
}

impl WignerGrid {
    pub fn value(&self, ix: usize, ip: usize) -> f64 {
        self.values[ix * self.spec.np + ip]
    }

    /// Riemann sum of `W dx dp`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.dx() * self.spec.dp()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `x,p,W` rows after a header line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["x", "p", "W"]).map_err(csv_err)?;
        for (ix, x) in self.spec.xs().enumerate() {
            for (ip, p) in self.spec.ps().enumerate() {
                w.write_record(&[x.to_string(), p.to_string(), self.value(ix, ip).to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// JSON header at `path` plus little-endian `f64` values next to it
    /// (`<path>.bin`, or the `data_file` named in the header).
    pub fn write_binary(&self, path: &Path) -> Result<PathBuf> {
        let data = path.with_extension("bin");
        let header = WignerHeader {
            grid: self.spec,
            w0: self.w0,
            dtype: "f64-le".into(),
            order: "x-major".into(),
            data_file: data.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        };
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(f, &header).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = BufWriter::new(File::create(&data)?);
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(data)
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let header: WignerHeader = serde_json::from_reader(BufReader::new(File::open(path)?))
            .map_err(|e| Error::Format(e.to_string()))?;
        if header.dtype != "f64-le" || header.order != "x-major" {
            return Err(Error::Format(format!("unsupported layout {}/{}", header.dtype, header.order)));
        }
        let data = path.parent().unwrap_or(Path::new(".")).join(&header.data_file);
        let mut bytes = Vec::new();
        File::open(data)?.read_to_end(&mut bytes)?;
        let n = header.grid.nx * header.grid.np;
        if bytes.len() != 8 * n {
            return Err(Error::Format(format!("expected {} values, found {} bytes", n, bytes.len())));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Self { spec: header.grid, values, w0: header.w0 })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
