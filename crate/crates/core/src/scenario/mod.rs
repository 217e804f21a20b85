//! Declarative scenarios: state, basis, channel and measurements in one
//! JSON document, evaluated into a deterministic [`Report`].

use std::fmt;

use nalgebra::Complex;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::fock::reduced::reduced_mode_state;
use crate::fock::wigner::{wigner, GridSpec, WignerGrid};
use crate::fock::{
    budget_cutoffs, default_leak_bound, fidelity, gaussian_to_fock_with, subtract_gaussian_dims, trace_distance,
    FockDensity, DEFAULT_LEAK_BOUND,
};
use crate::gaussian::{change_basis, duan_value, epr_value, nullifier_variances, Adjacency, CovarianceMatrix};
use crate::homodyne::{kurtosis_estimate, sample, DEFAULT_BOOTSTRAP};
use crate::mode_basis::{BasisName, CoefficientVector, ModeTransform};
use crate::subtraction::{ideal_spec, SubtractionSpec};
use crate::tomography::reconstruct;
use crate::wick::SubtractedState;

mod config;
pub mod presets;
mod report;

pub use config::*;
pub use report::*;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    State,
    Basis,
    Channel,
    Oracle,
    Reduction,
    Sampling,
    Estimation,
    Tomography,
    Analysis,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::State => "state",
            Stage::Basis => "basis",
            Stage::Channel => "channel",
            Stage::Oracle => "oracle",
            Stage::Reduction => "reduction",
            Stage::Sampling => "sampling",
            Stage::Estimation => "estimation",
            Stage::Tomography => "tomography",
            Stage::Analysis => "analysis",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}{}] {source}", context.as_ref().map(|c| format!(" {c}")).unwrap_or_default())]
pub struct ScenarioError {
    pub stage: Stage,
    /// Measurement label or similar locator.
    pub context: Option<String>,
    #[source]
    pub source: Error,
}

impl ScenarioError {
    pub fn new(stage: Stage, source: Error) -> Self {
        Self { stage, context: None, source }
    }

    fn at(stage: Stage, context: &str) -> impl Fn(Error) -> Self + '_ {
        move |source| Self { stage, context: Some(context.to_string()), source }
    }

    /// Malformed or inconsistent configuration, as opposed to a failure
    /// while running a valid one.
    pub fn is_config(&self) -> bool {
        self.stage == Stage::Config
    }
}

type Result<T> = std::result::Result<T, ScenarioError>;

/// Model inputs shared by every measurement.
struct Prepared {
    v: CovarianceMatrix<f64>,
    basis: ModeTransform<f64>,
    spec: Option<SubtractionSpec<f64>>,
    wick: SubtractedState<f64>,
    reduced_cutoff: usize,
    leak_bound: f64,
}

impl Prepared {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let v = cfg.covariance()?;
        let basis = cfg.basis(v.modes())?;
        let spec = cfg.subtraction_spec(&basis)?;
        let wick = match &spec {
            Some(s) => SubtractedState::new(&v, s).map_err(|e| ScenarioError::new(Stage::Channel, e))?,
            None => SubtractedState::gaussian(&v),
        };
        Ok(Self {
            reduced_cutoff: cfg.cutoffs.reduced.unwrap_or(DEFAULT_REDUCED_CUTOFF),
            leak_bound: cfg.cutoffs.leak_bound.unwrap_or(DEFAULT_LEAK_BOUND),
            v,
            basis,
            spec,
            wick,
        })
    }

    /// HG vector, reference phase and label of a measurement.
    fn resolve(&self, sel: &ModeSelector) -> Result<(CoefficientVector<f64>, Complex<f64>, String, Option<usize>)> {
        let bs = |e| ScenarioError::new(Stage::Basis, e);
        match sel {
            ModeSelector::Index(k) => Ok((
                self.basis.mode(*k).map_err(bs)?,
                self.basis.reference_phases()[*k],
                self.basis.mode_label(*k),
                Some(*k),
            )),
            ModeSelector::Custom(c) => {
                let u = CoefficientVector::new(c.hg.iter().map(|p| Complex::new(p[0], p[1])).collect())
                    .and_then(|u| u.embed(self.v.modes()))
                    .map_err(bs)?;
                let r = c.reference_phase.map(|p| Complex::new(p[0], p[1])).unwrap_or(Complex::new(1.0, 0.0));
                if (r.norm() - 1.0).abs() > 1e-12 {
                    return Err(ScenarioError::new(
                        Stage::Config,
                        Error::InvalidParameter("reference_phase must have unit modulus".into()),
                    ));
                }
                let label = c.label.clone().unwrap_or_else(|| format_mode(&u));
                Ok((u, r, label, None))
            }
        }
    }

    fn reduced(&self, u: &CoefficientVector<f64>, r: Complex<f64>, label: &str) -> Result<FockDensity<f64>> {
        reduced_mode_state(&self.v, self.spec.as_ref(), u, r, self.reduced_cutoff, self.leak_bound)
            .map(|(s, _)| s)
            .map_err(ScenarioError::at(Stage::Reduction, label))
    }

    /// Ideal subtraction from the mode's own input state.
    fn ideal_reference(&self, u: &CoefficientVector<f64>, r: Complex<f64>, label: &str) -> Result<FockDensity<f64>> {
        reduced_mode_state(&self.v, Some(&ideal_spec(u.clone())), u, r, self.reduced_cutoff, self.leak_bound)
            .map(|(s, _)| s)
            .map_err(ScenarioError::at(Stage::Reduction, label))
    }
}

fn format_mode(u: &CoefficientVector<f64>) -> String {
    let parts: Vec<String> = u
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 1e-12)
        .map(|(k, z)| format!("({:+.3}{:+.3}i)HG{k}", z.re, z.im))
        .collect();
    parts.join("")
}

fn pairs(u: &CoefficientVector<f64>) -> Vec<Pair> {
    u.entries().iter().map(|z| [z.re, z.im]).collect()
}

/// Seed of measurement `i` unless the measurement sets its own.
pub fn measurement_seed(scenario_seed: u64, i: usize) -> u64 {
    scenario_seed.wrapping_add(i as u64)
}

/// Bootstrap resampling seed derived from a measurement seed.
fn bootstrap_seed(seed: u64) -> u64 {
    seed ^ 0x5EED_B007
}

fn config_hash(cfg: &ScenarioConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Oracle basis size, counted one level above the cutoffs.
pub const ORACLE_BUDGET: usize = 4096;

/// Full multimode state with cutoffs weighted towards `focus`.
fn oracle_state(cfg: &ScenarioConfig, p: &Prepared, focus: usize) -> Result<(FockDensity<f64>, Vec<usize>)> {
    let m = p.v.modes();
    let bound = cfg.cutoffs.leak_bound.unwrap_or_else(|| default_leak_bound(m));
    let orc = |e| ScenarioError::new(Stage::Oracle, e);
    let vb = change_basis(&p.v, &p.basis).map_err(orc)?;
    let dims = match cfg.cutoffs.oracle {
        Some(c) => vec![c; m],
        None => budget_cutoffs(&vb, ORACLE_BUDGET, Some(focus)).map_err(orc)?,
    };
    let state = match &p.spec {
        Some(s) => subtract_gaussian_dims(&p.v, s, Some(&p.basis), &dims, bound).map_err(orc)?.0,
        None => gaussian_to_fock_with(&vb, &dims, bound).map_err(orc)?,
    };
    Ok((state, dims))
}

fn state_summary(p: &Prepared) -> Result<(StateSummary, CovarianceMatrix<f64>)> {
    let vb = change_basis(&p.v, &p.basis).map_err(|e| ScenarioError::new(Stage::Basis, e))?;
    let val = p.v.validate();
    let mode_purities = (0..vb.modes())
        .map(|k| vb.mode_purity(k))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| ScenarioError::new(Stage::State, e))?;
    Ok((
        StateSummary {
            modes: p.v.modes(),
            basis: p.basis.label().to_string(),
            physical: val.physical,
            min_uncertainty_eigenvalue: val.min_uncertainty_eigenvalue,
            purity: p.v.purity(),
            mode_purities,
        },
        vb,
    ))
}

fn criteria_summary(cfg: &ScenarioConfig, vb: &CovarianceMatrix<f64>) -> Result<Option<CriteriaSummary>> {
    let an = |e| ScenarioError::new(Stage::Analysis, e);
    let mut c = CriteriaSummary::default();
    if cfg.analyses.contains(&Analysis::Duan) {
        let value = duan_value(vb, 0, 1).map_err(an)?;
        c.duan = Some(Witness { value, bound: 4.0, witnessed: value < 4.0 });
    }
    if cfg.analyses.contains(&Analysis::Epr) {
        let value = epr_value(vb, 1, 0).map_err(an)?;
        c.epr = Some(Witness { value, bound: 1.0, witnessed: value < 1.0 });
    }
    if cfg.analyses.contains(&Analysis::Nullifiers) {
        let graph = match cfg.basis.name.parse::<BasisName>().map_err(an)? {
            BasisName::Lc => Adjacency::chain(4),
            _ => Adjacency::ring(4),
        };
        let keep: Vec<usize> = (0..4).collect();
        let sub = vb.marginal(&keep).map_err(an)?;
        c.nullifiers = Some(nullifier_variances(&sub, &graph).map_err(an)?);
    }
    Ok((c.duan.is_some() || c.epr.is_some() || c.nullifiers.is_some()).then_some(c))
}

/// Entanglement witnesses and validation of the input state.
pub fn criteria(cfg: &ScenarioConfig) -> Result<(StateSummary, Option<CriteriaSummary>)> {
    let p = Prepared::new(cfg)?;
    let (summary, vb) = state_summary(&p)?;
    Ok((summary, criteria_summary(cfg, &vb)?))
}

/// Runs every analysis of the scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<Report> {
    let p = Prepared::new(cfg)?;
    let (state, vb) = state_summary(&p)?;
    let criteria = criteria_summary(cfg, &vb)?;
    let mut warnings = Vec::new();
    if !state.physical {
        warnings.push("input covariance violates the uncertainty relation".into());
    }

    let channel = match &p.spec {
        None => None,
        Some(s) => Some(ChannelSummary {
            coefficients_hg: pairs(s.c()),
            w0: s.w0(),
            p0: s.p0(),
            background_modes: s.background_modes(),
            trace: p.wick.trace(),
            heralding_weight: p.wick.heralding_weight(),
        }),
    };

    let use_oracle = cfg.oracle || cfg.cross_validate;
    let mut oracle: Option<(usize, FockDensity<f64>, Vec<usize>)> = None;

    let has = |a: Analysis| cfg.analyses.contains(&a);
    let mut measurements = Vec::with_capacity(cfg.measurements.len());
    for (i, mc) in cfg.measurements.iter().enumerate() {
        let (u, r, label, index) = p.resolve(&mc.mode)?;
        let an = ScenarioError::at(Stage::Analysis, &label);
        let reduced = if cfg.oracle { None } else { Some(p.reduced(&u, r, &label)?) };
        let from_oracle = match index {
            Some(k) if use_oracle => {
                if oracle.as_ref().map(|o| o.0) != Some(k) {
                    let (full, dims) = oracle_state(cfg, &p, k)?;
                    oracle = Some((k, full, dims));
                }
                let full = &oracle.as_ref().expect("built above").1;
                Some(full.partial_trace(&[k]).map_err(ScenarioError::at(Stage::Oracle, &label))?)
            }
            _ => None,
        };
        if cfg.cross_validate && index.is_none() {
            warnings.push(format!("{label}: custom modes are not cross-validated"));
        }
        let model = match (&reduced, &from_oracle) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => s.clone(),
            (None, None) => unreachable!("oracle runs when the reduced path is off"),
        };

        let kurtosis = if has(Analysis::Kurtosis) {
            let analytic = p.wick.phase_averaged(&u).map_err(&an)?.excess_kurtosis;
            let input = SubtractedState::gaussian(&p.v).phase_averaged(&u).map_err(&an)?.excess_kurtosis;
            Some(KurtosisReport { analytic, input, sampled: None })
        } else {
            None
        };

        let mut report = MeasurementReport {
            label: label.clone(),
            mode_hg: pairs(&u),
            path: if cfg.oracle { "oracle" } else { "reduced" }.into(),
            kurtosis,
            w0: if has(Analysis::W0) { Some(model.parity_w0().map_err(&an)?) } else { None },
            purity: if has(Analysis::Purity) { Some(model.purity()) } else { None },
            fidelity: None,
            wigner: None,
            tomography: None,
            cross_validation: None,
            wigner_grid: None,
            dataset: None,
        };

        let seed = mc.seed.unwrap_or_else(|| measurement_seed(cfg.seed, i));
        let mut reconstructed = None;
        if mc.samples > 0 {
            let one = CoefficientVector::basis_vector(1, 0).map_err(&an)?;
            let data = sample(&model, &one, &mc.schedule, mc.samples, mc.eta, seed)
                .map_err(ScenarioError::at(Stage::Sampling, &label))?;
            let data = crate::homodyne::QuadratureDataset { mode: u.clone(), source: format!("{}:{label}", cfg.name), ..data };
            if let Some(k) = report.kurtosis.as_mut() {
                let est = kurtosis_estimate(&data, DEFAULT_BOOTSTRAP, bootstrap_seed(seed))
                    .map_err(ScenarioError::at(Stage::Estimation, &label))?;
                k.sampled = Some(SampledKurtosis {
                    value: est.excess_kurtosis,
                    standard_error: est.standard_error,
                    samples: est.samples,
                    resamples: est.resamples,
                    eta: mc.eta,
                    seed,
                });
            }
            if let Some(tc) = &mc.tomography {
                let res = reconstruct(&data, tc).map_err(ScenarioError::at(Stage::Tomography, &label))?;
                if !res.converged {
                    warnings.push(format!("{label}: tomography stopped at max_iters"));
                }
                let (_, _, k) = res.state.phase_averaged_kurtosis().map_err(&an)?;
                report.tomography = Some(TomographySummary {
                    cutoff: tc.cutoff,
                    eta: tc.eta,
                    iterations: res.iterations,
                    converged: res.converged,
                    operators: res.operators,
                    log_likelihood: *res.log_likelihood.last().expect("history starts non-empty"),
                    w0: res.state.parity_w0().map_err(&an)?,
                    purity: res.state.purity(),
                    excess_kurtosis: k,
                });
                reconstructed = Some(res.state);
            }
            report.dataset = Some(data);
        }

        if has(Analysis::Fidelity) {
            let reference = p.ideal_reference(&u, r, &label)?;
            let subject = reconstructed.as_ref().unwrap_or(&model);
            let d = subject.dims()[0].max(reference.dims()[0]);
            let f = fidelity(&subject.pad(&[d]).map_err(&an)?, &reference.pad(&[d]).map_err(&an)?).map_err(&an)?;
            report.fidelity = Some(f);
        }

        if has(Analysis::Wigner) {
            let grid = wigner_grid(&model, &label)?;
            report.wigner = Some(WignerSummary {
                grid: grid.spec,
                min: grid.min_value(),
                integral: grid.integral(),
                file: None,
            });
            report.wigner_grid = Some(grid);
        }

        if let (Some(red), Some(orc), Some((_, _, oc))) = (&reduced, &from_oracle, &oracle) {
            report.cross_validation = Some(cross_validate(red, orc, oc, &p, &u).map_err(&an)?);
        }
        measurements.push(report);
    }

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        description: cfg.description.clone(),
        provenance: Provenance {
            config_sha256: config_hash(cfg),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        state,
        criteria,
        channel,
        measurements,
        warnings,
    })
}

fn wigner_grid(rho: &FockDensity<f64>, label: &str) -> Result<WignerGrid> {
    let spec = GridSpec::auto(rho).map_err(ScenarioError::at(Stage::Analysis, label))?;
    wigner(rho, &spec).map_err(ScenarioError::at(Stage::Analysis, label))
}

fn cross_validate(
    reduced: &FockDensity<f64>,
    oracle: &FockDensity<f64>,
    oracle_cutoffs: &[usize],
    p: &Prepared,
    u: &CoefficientVector<f64>,
) -> crate::error::Result<CrossValidation> {
    let (_, _, k_oracle) = oracle.phase_averaged_kurtosis()?;
    let k_wick = p.wick.phase_averaged(u)?.excess_kurtosis;
    let d = reduced.dims()[0].max(oracle.dims()[0]);
    let td = trace_distance(&reduced.pad(&[d])?, &oracle.pad(&[d])?)?;
    let kurtosis = (k_wick - k_oracle).abs();
    let w0 = (reduced.parity_w0()? - oracle.parity_w0()?).abs();
    let purity = (reduced.purity() - oracle.purity()).abs();
    Ok(CrossValidation {
        oracle_cutoffs: oracle_cutoffs.to_vec(),
        kurtosis,
        w0,
        purity,
        trace_distance: td,
        max_deviation: kurtosis.max(w0).max(purity).max(td),
    })
}

/// Wigner grid of basis mode `k` after the scenario's channel.
pub fn mode_wigner(cfg: &ScenarioConfig, k: usize) -> Result<WignerGrid> {
    let p = Prepared::new(cfg)?;
    if k >= p.basis.dim() {
        return Err(ScenarioError::new(
            Stage::Config,
            Error::Dimension(format!("mode {k} out of range for {} modes", p.basis.dim())),
        ));
    }
    let (u, r, label, _) = p.resolve(&ModeSelector::Index(k))?;
    let rho = p.reduced(&u, r, &label)?;
    wigner_grid(&rho, &label)
}
