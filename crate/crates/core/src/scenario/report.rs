//! Report schema. Every field is produced by one of the library operations;
//! grids and datasets ride along unserialized so callers can write them.

use serde::Serialize;

use crate::fock::wigner::{GridSpec, WignerGrid};
use crate::homodyne::QuadratureDataset;

use super::config::Pair;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub name: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub provenance: Provenance,
    pub state: StateSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criteria: Option<CriteriaSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSummary>,
    pub measurements: Vec<MeasurementReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    /// SHA-256 of the canonical JSON of the parsed config.
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateSummary {
    pub modes: usize,
    pub basis: String,
    pub physical: bool,
    pub min_uncertainty_eigenvalue: f64,
    pub purity: f64,
    /// Gaussian purity of each basis mode before subtraction.
    pub mode_purities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub value: f64,
    /// Entanglement is witnessed below this value.
    pub bound: f64,
    pub witnessed: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CriteriaSummary {
    /// Over basis modes 0 and 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duan: Option<Witness>,
    /// Mode 1 conditioned on mode 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epr: Option<Witness>,
    /// Normalized to the vacuum; below 1 is squeezing of the nullifier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nullifiers: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelSummary {
    pub coefficients_hg: Vec<Pair>,
    pub w0: f64,
    pub p0: f64,
    pub background_modes: usize,
    /// `tr R[ρ]`.
    pub trace: f64,
    /// `tr R[ρ] - w0`.
    pub heralding_weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampledKurtosis {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub resamples: usize,
    pub eta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KurtosisReport {
    /// Phase-averaged, after the channel, before detection loss.
    pub analytic: f64,
    /// Same mode before the channel.
    pub input: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledKurtosis>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WignerSummary {
    pub grid: GridSpec,
    pub min: f64,
    pub integral: f64,
    /// Set by callers that write the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographySummary {
    pub cutoff: usize,
    pub eta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub operators: usize,
    pub log_likelihood: f64,
    pub w0: f64,
    pub purity: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub oracle_cutoffs: Vec<usize>,
    pub kurtosis: f64,
    pub w0: f64,
    pub purity: f64,
    pub trace_distance: f64,
    /// Largest of the deviations above.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasurementReport {
    pub label: String,
    pub mode_hg: Vec<Pair>,
    /// `"reduced"` (two-mode marginal per channel term) or `"oracle"`.
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kurtosis: Option<KurtosisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
    /// Uhlmann fidelity with ideal subtraction from this mode's input state;
    /// uses the reconstruction when tomography ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_validation: Option<CrossValidation>,
    #[serde(skip)]
    pub wigner_grid: Option<WignerGrid>,
    #[serde(skip)]
    pub dataset: Option<QuadratureDataset>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn measurement(&self, label: &str) -> Option<&MeasurementReport> {
        self.measurements.iter().find(|m| m.label == label)
    }

    /// Measurement with the most negative analytic kurtosis.
    pub fn kurtosis_argmin(&self) -> Option<&MeasurementReport> {
        self.measurements
            .iter()
            .filter(|m| m.kurtosis.is_some())
            .min_by(|a, b| {
                let ka = a.kurtosis.as_ref().map(|k| k.analytic).unwrap_or(f64::INFINITY);
                let kb = b.kurtosis.as_ref().map(|k| k.analytic).unwrap_or(f64::INFINITY);
                ka.total_cmp(&kb)
            })
    }

    /// One row per measurement.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "label",
            "path",
            "kurtosis_analytic",
            "kurtosis_input",
            "kurtosis_sampled",
            "kurtosis_se",
            "w0",
            "purity",
            "fidelity",
            "max_cross_validation_deviation",
        ];
        w.write_record(header).expect("in-memory write");
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for m in &self.measurements {
            let k = m.kurtosis.as_ref();
            let s = k.and_then(|k| k.sampled.as_ref());
            w.write_record([
                m.label.clone(),
                m.path.clone(),
                opt(k.map(|k| k.analytic)),
                opt(k.map(|k| k.input)),
                opt(s.map(|s| s.value)),
                opt(s.map(|s| s.standard_error)),
                opt(m.w0),
                opt(m.purity),
                opt(m.fidelity),
                opt(m.cross_validation.as_ref().map(|c| c.max_deviation)),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}
