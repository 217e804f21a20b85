//! JSON scenario schema. Complex numbers are `[re, im]` pairs.

use std::fmt;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::{ScenarioError, Stage};
use crate::error::Error;
use crate::gaussian::{covariance_from_squeeze, CovarianceMatrix, SqueezeSpec};
use crate::homodyne::PhaseSchedule;
use crate::mode_basis::{builtin_basis, BasisName, CoefficientVector, ModeTransform};
use crate::subtraction::{SubtractionSpec, LAB_N, LAB_P0, LAB_W0};
use crate::tomography::TomographyConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub type Pair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub state: StateConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtraction: Option<SubtractionConfig>,
    #[serde(default)]
    pub measurements: Vec<MeasurementConfig>,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cutoffs: CutoffConfig,
    /// Evaluate measured modes on the full multimode Fock state.
    #[serde(default)]
    pub oracle: bool,
    /// Run both paths and report their deviations.
    #[serde(default)]
    pub cross_validate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateConfig {
    /// The measured diagonal covariance of the four HG modes.
    #[serde(rename = "paper-ed3")]
    MeasuredHg,
    /// `(x dB, p dB)` per mode.
    Squeezed { db: Vec<Pair> },
    /// Pure p-squeezed vacua, one squeezing level per mode.
    PureSqueezed { db: Vec<f64> },
    /// Full covariance in `(x0, p0, x1, p1, ...)` order.
    Covariance { matrix: Vec<Vec<f64>> },
}

/// `HG`, `EPR`, `LC`, `SC` or `custom` with an explicit unitary. Bases
/// smaller than the state act on its leading modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub name: String,
    /// Rows are the new modes in HG coefficients (custom only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<Pair>>>,
    /// Quadrature phase shared by every new mode (custom only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_phase: Option<Pair>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self { name: "HG".into(), matrix: None, reference_phase: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// Coefficients over the modes of the configured basis.
    #[default]
    Basis,
    /// Coefficients over HG modes.
    Hg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubtractionConfig {
    pub coefficients: Vec<Pair>,
    #[serde(default)]
    pub frame: Frame,
    #[serde(default)]
    pub channel: ChannelConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChannelConfig {
    #[default]
    Ideal,
    /// `w0 = 0.0094`, `p0 = 0.95`, four background modes.
    Lab,
    Custom { w0: f64, p0: f64, n: usize },
}

/// A basis mode index, or an explicit HG vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeSelector {
    Index(usize),
    Custom(CustomMode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMode {
    pub hg: Vec<Pair>,
    /// Multiplies the internal-frame coefficients; `[1, 0]` by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_phase: Option<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub mode: ModeSelector,
    #[serde(default = "uniform")]
    pub schedule: PhaseSchedule,
    /// Simulated homodyne records; 0 keeps the measurement analytic.
    #[serde(default)]
    pub samples: usize,
    /// Detection efficiency applied to the simulated records.
    #[serde(default = "one")]
    pub eta: f64,
    /// Overrides the seed derived from the scenario seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Reconstruct the state from the records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographyConfig>,
}

fn uniform() -> PhaseSchedule {
    PhaseSchedule::Uniform
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Wigner,
    W0,
    Purity,
    Fidelity,
    Kurtosis,
    Duan,
    Epr,
    Nullifiers,
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    /// Single-mode cutoff of measured states (default 30).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<usize>,
    /// Uniform per-mode cutoff of the multimode oracle. By default cutoffs
    /// are spread over the modes by their photon-number tails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_bound: Option<f64>,
}

pub const DEFAULT_REDUCED_CUTOFF: usize = 30;

fn cplx(p: &Pair) -> Complex<f64> {
    Complex::new(p[0], p[1])
}

fn config_err(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::new(Stage::Config, Error::InvalidParameter(msg.into()))
}

impl ScenarioConfig {
    /// Parses and validates. Parse errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        // serde_json messages already end in "at line L column C"
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| ScenarioError::new(Stage::Config, Error::Format(e.to_string())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.analyses.is_empty() {
            return Err(config_err("analyses: at least one analysis is required"));
        }
        let v = self.covariance()?;
        let basis = self.basis(v.modes())?;
        let n = basis.dim();
        if let Some(sub) = &self.subtraction {
            let limit = match sub.frame {
                Frame::Basis => n,
                Frame::Hg => v.modes(),
            };
            if sub.coefficients.is_empty() || sub.coefficients.len() > limit {
                return Err(config_err(format!(
                    "subtraction.coefficients: {} entries for {limit} modes",
                    sub.coefficients.len()
                )));
            }
            self.subtraction_spec(&basis)?;
        }
        let needs_modes = self.analyses.iter().any(|a| {
            matches!(a, Analysis::Wigner | Analysis::W0 | Analysis::Purity | Analysis::Fidelity | Analysis::Kurtosis)
        });
        if needs_modes && self.measurements.is_empty() {
            return Err(config_err("measurements: per-mode analyses need at least one measurement"));
        }
        for (i, m) in self.measurements.iter().enumerate() {
            match &m.mode {
                ModeSelector::Index(k) if *k >= n => {
                    return Err(config_err(format!("measurements[{i}].mode: {k} out of range for {n} modes")));
                }
                ModeSelector::Custom(c) if c.hg.is_empty() || c.hg.len() > v.modes() => {
                    return Err(config_err(format!(
                        "measurements[{i}].mode.hg: {} entries for {} modes",
                        c.hg.len(),
                        v.modes()
                    )));
                }
                ModeSelector::Custom(_) if self.oracle => {
                    return Err(config_err(format!(
                        "measurements[{i}].mode: the oracle path measures basis modes only"
                    )));
                }
                _ => {}
            }
            if !(m.eta > 0.0 && m.eta <= 1.0) {
                return Err(config_err(format!("measurements[{i}].eta: {} outside (0, 1]", m.eta)));
            }
            if let Some(t) = &m.tomography {
                if m.samples == 0 {
                    return Err(config_err(format!("measurements[{i}].tomography: needs samples > 0")));
                }
                t.validate()
                    .map_err(|e| config_err(format!("measurements[{i}].tomography: {e}")))?;
            }
            if m.samples > 0 && m.samples < crate::homodyne::MIN_ESTIMATOR_SAMPLES {
                return Err(config_err(format!(
                    "measurements[{i}].samples: {} is below the estimator minimum {}",
                    m.samples,
                    crate::homodyne::MIN_ESTIMATOR_SAMPLES
                )));
            }
        }
        if self.analyses.contains(&Analysis::Nullifiers) && !matches!(self.basis_name()?, Some(BasisName::Lc | BasisName::Sc)) {
            return Err(config_err("analyses: nullifiers need the LC or SC basis"));
        }
        if (self.analyses.contains(&Analysis::Duan) || self.analyses.contains(&Analysis::Epr)) && n < 2 {
            return Err(config_err("analyses: duan and epr need two modes"));
        }
        if let Some(b) = self.cutoffs.leak_bound {
            if !(b > 0.0 && b < 1.0) {
                return Err(config_err("cutoffs.leak_bound must lie in (0, 1)"));
            }
        }
        for c in [self.cutoffs.reduced, self.cutoffs.oracle].into_iter().flatten() {
            if c < 2 {
                return Err(config_err("cutoffs must be at least 2"));
            }
        }
        Ok(())
    }

    pub fn covariance(&self) -> Result<CovarianceMatrix<f64>, ScenarioError> {
        let st = |e| ScenarioError::new(Stage::State, e);
        match &self.state {
            StateConfig::MeasuredHg => Ok(covariance_from_squeeze(&SqueezeSpec::measured_hg())),
            StateConfig::Squeezed { db } => {
                let pairs: Vec<(f64, f64)> = db.iter().map(|p| (p[0], p[1])).collect();
                Ok(covariance_from_squeeze(&SqueezeSpec::from_f64(&pairs).map_err(st)?))
            }
            StateConfig::PureSqueezed { db } => Ok(covariance_from_squeeze(&SqueezeSpec::pure(db).map_err(st)?)),
            StateConfig::Covariance { matrix } => {
                let n = matrix.len();
                if n == 0 || n % 2 != 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(st(Error::Dimension(format!(
                        "state.matrix must be square with even size, got {n} rows"
                    ))));
                }
                CovarianceMatrix::new(DMatrix::from_fn(n, n, |i, j| matrix[i][j])).map_err(st)
            }
        }
    }

    fn basis_name(&self) -> Result<Option<BasisName>, ScenarioError> {
        if self.basis.name.eq_ignore_ascii_case("custom") {
            return Ok(None);
        }
        self.basis
            .name
            .parse()
            .map(Some)
            .map_err(|e: Error| ScenarioError::new(Stage::Basis, e))
    }

    /// The measurement basis over all `modes` of the state.
    pub fn basis(&self, modes: usize) -> Result<ModeTransform<f64>, ScenarioError> {
        let bs = |e| ScenarioError::new(Stage::Basis, e);
        let t = match self.basis_name()? {
            Some(BasisName::Hg) => builtin_basis(BasisName::Hg, modes).map_err(bs)?,
            Some(name) => {
                let n = match name {
                    BasisName::Epr => 2,
                    _ => 4,
                };
                builtin_basis(name, n).map_err(bs)?
            }
            None => {
                let rows = self
                    .basis
                    .matrix
                    .as_ref()
                    .ok_or_else(|| config_err("basis.matrix is required for a custom basis"))?;
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(config_err("basis.matrix must be square"));
                }
                let m = DMatrix::from_fn(n, n, |i, j| cplx(&rows[i][j]));
                let phase = self.basis.reference_phase.map(|p| cplx(&p)).unwrap_or(Complex::new(1.0, 0.0));
                ModeTransform::new(m, "custom").and_then(|t| t.with_uniform_phase(phase)).map_err(bs)?
            }
        };
        let custom = self.basis.name.eq_ignore_ascii_case("custom");
        if !custom && (self.basis.matrix.is_some() || self.basis.reference_phase.is_some()) {
            return Err(config_err("basis.matrix and basis.reference_phase apply to custom bases only"));
        }
        if t.dim() > modes {
            return Err(bs(Error::UnsupportedBasis { name: self.basis.name.clone(), modes }));
        }
        t.embed(modes).map_err(bs)
    }

    /// HG coefficients of the subtraction mode and the channel.
    pub fn subtraction_spec(&self, basis: &ModeTransform<f64>) -> Result<Option<SubtractionSpec<f64>>, ScenarioError> {
        let Some(sub) = &self.subtraction else {
            return Ok(None);
        };
        let ch = |e| ScenarioError::new(Stage::Channel, e);
        let mut c: Vec<Complex<f64>> = sub.coefficients.iter().map(cplx).collect();
        let hg = match sub.frame {
            Frame::Hg => CoefficientVector::new(c).and_then(|u| u.embed(basis.dim())).map_err(ch)?,
            Frame::Basis => {
                c.resize(basis.dim(), Complex::new(0.0, 0.0));
                let w = CoefficientVector::new(c).map_err(ch)?;
                crate::mode_basis::superpose(basis, &w).map_err(ch)?
            }
        };
        let spec = match sub.channel {
            ChannelConfig::Ideal => {
                let n = hg.len();
                SubtractionSpec::new(hg, 0.0, 1.0, n)
            }
            ChannelConfig::Lab => SubtractionSpec::new(hg, LAB_W0, LAB_P0, LAB_N),
            ChannelConfig::Custom { w0, p0, n } => SubtractionSpec::new(hg, w0, p0, n),
        }
        .map_err(ch)?;
        Ok(Some(spec))
    }
}
