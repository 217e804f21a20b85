//! Shipped scenarios. States use the measured squeezing of the four HG
//! modes; channels use `w0 = 0.0094`, `p0 = 0.95`, four background modes;
//! simulated homodyne data has 30 000 records at 87.5 % efficiency.

use super::config::*;
use crate::homodyne::PhaseSchedule;
use crate::tomography::TomographyConfig;

pub const SAMPLES: usize = 30_000;
pub const ETA: f64 = 0.875;

const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

const NAMES: &[&str] = &[
    "vacuum",
    "fig2a-input",
    "fig2a-subtract-HG0",
    "fig2a-subtract-HG1",
    "fig2a-subtract-HG2",
    "fig2b-superposition",
    "fig2b-three-mode",
    "fig2b-epr",
    "ed1-loss-correction",
    "ed2-mode-mismatch",
    "fig3a-input",
    "fig3a-subtract-LC3",
    "fig3a-subtract-LC2",
    "fig3a-superposition",
    "fig3b-input",
    "fig3b-subtract-SC0",
];

pub fn names() -> &'static [&'static str] {
    NAMES
}

fn measured(mode: ModeSelector) -> MeasurementConfig {
    MeasurementConfig {
        mode,
        schedule: PhaseSchedule::Uniform,
        samples: SAMPLES,
        eta: ETA,
        seed: None,
        tomography: None,
    }
}

fn index(k: usize) -> MeasurementConfig {
    measured(ModeSelector::Index(k))
}

fn custom(hg: Vec<Pair>, label: &str) -> MeasurementConfig {
    measured(ModeSelector::Custom(CustomMode { hg, reference_phase: None, label: Some(label.into()) }))
}

fn lab_channel(coefficients: Vec<Pair>, frame: Frame) -> Option<SubtractionConfig> {
    Some(SubtractionConfig { coefficients, frame, channel: ChannelConfig::Lab })
}

fn unit(k: usize) -> Vec<Pair> {
    let mut c = vec![[0.0, 0.0]; k + 1];
    c[k] = [1.0, 0.0];
    c
}

fn base(name: &str, description: &str, basis: &str) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        description: description.into(),
        state: StateConfig::MeasuredHg,
        basis: BasisConfig { name: basis.into(), ..Default::default() },
        subtraction: None,
        measurements: Vec::new(),
        analyses: vec![Analysis::W0, Analysis::Purity, Analysis::Kurtosis],
        seed: 20_170_906,
        cutoffs: CutoffConfig::default(),
        oracle: false,
        cross_validate: false,
    }
}

/// Looks up a shipped scenario by name.
pub fn get(name: &str) -> Option<ScenarioConfig> {
    let hg3 = || (0..3).map(index).collect::<Vec<_>>();
    let all4 = || (0..4).map(index).collect::<Vec<_>>();
    let cfg = match name {
        "vacuum" => ScenarioConfig {
            state: StateConfig::PureSqueezed { db: vec![0.0] },
            measurements: vec![MeasurementConfig { samples: 0, eta: 1.0, ..index(0) }],
            analyses: vec![Analysis::Wigner, Analysis::W0, Analysis::Purity, Analysis::Kurtosis],
            ..base(name, "Single-mode vacuum.", "HG")
        },
        "fig2a-input" => ScenarioConfig {
            measurements: hg3(),
            analyses: vec![Analysis::W0, Analysis::Purity, Analysis::Kurtosis, Analysis::Duan, Analysis::Epr],
            ..base(name, "Measured HG squeezing without subtraction.", "HG")
        },
        "fig2a-subtract-HG0" | "fig2a-subtract-HG1" | "fig2a-subtract-HG2" => {
            let k = name.as_bytes()[name.len() - 1] as usize - b'0' as usize;
            ScenarioConfig {
                subtraction: lab_channel(unit(k), Frame::Basis),
                measurements: hg3(),
                analyses: vec![Analysis::Wigner, Analysis::W0, Analysis::Purity, Analysis::Fidelity, Analysis::Kurtosis],
                ..base(name, "Subtraction in a single HG mode; only that mode turns non-Gaussian.", "HG")
            }
        }
        "fig2b-superposition" => ScenarioConfig {
            subtraction: lab_channel(vec![[S2, 0.0], [0.0, -S2]], Frame::Hg),
            measurements: vec![index(0), index(1), custom(vec![[S2, 0.0], [0.0, -S2]], "HG0-iHG1")],
            analyses: vec![Analysis::W0, Analysis::Purity, Analysis::Fidelity, Analysis::Kurtosis],
            ..base(name, "Subtraction in HG0 - iHG1.", "HG")
        },
        "fig2b-three-mode" => {
            let a = 1.0 / 3f64.sqrt();
            let c = vec![[a, 0.0], [0.0, a], [a, 0.0]];
            ScenarioConfig {
                subtraction: lab_channel(c.clone(), Frame::Hg),
                measurements: vec![index(0), index(1), index(2), custom(c, "HG0+iHG1+HG2")],
                analyses: vec![Analysis::W0, Analysis::Purity, Analysis::Fidelity, Analysis::Kurtosis],
                ..base(name, "Subtraction in HG0 + iHG1 + HG2.", "HG")
            }
        }
        "fig2b-epr" => ScenarioConfig {
            subtraction: lab_channel(unit(0), Frame::Basis),
            measurements: vec![index(0), index(1)],
            analyses: vec![Analysis::W0, Analysis::Purity, Analysis::Kurtosis, Analysis::Duan, Analysis::Epr],
            ..base(name, "Subtraction in EPR0 of the EPR pair built from HG0 and HG1.", "EPR")
        },
        "ed1-loss-correction" => {
            let tomo = |eta| TomographyConfig { eta, ..Default::default() };
            let seed = Some(20_170_906);
            ScenarioConfig {
                subtraction: lab_channel(unit(0), Frame::Basis),
                measurements: vec![
                    MeasurementConfig { seed, tomography: Some(tomo(1.0)), ..index(0) },
                    MeasurementConfig { seed, tomography: Some(tomo(ETA)), ..index(0) },
                ],
                analyses: vec![Analysis::W0, Analysis::Purity, Analysis::Fidelity],
                ..base(name, "HG0 reconstructed from the same records without and with loss correction.", "HG")
            }
        }
        "ed2-mode-mismatch" => {
            let c = vec![[S2, 0.0], [0.0, -S2]];
            ScenarioConfig {
                subtraction: lab_channel(c.clone(), Frame::Hg),
                measurements: vec![
                    custom(c, "HG0-iHG1"),
                    custom(vec![[0.0, 0.0], [0.0, 1.0]], "iHG1"),
                    custom(vec![[S2, 0.0], [0.0, S2]], "HG0+iHG1"),
                ],
                analyses: vec![Analysis::W0, Analysis::Purity, Analysis::Kurtosis],
                ..base(name, "Subtraction in HG0 - iHG1 measured in full, partial and no match.", "HG")
            }
        }
        "fig3a-input" => ScenarioConfig {
            measurements: all4(),
            analyses: vec![Analysis::Purity, Analysis::Kurtosis, Analysis::Nullifiers],
            ..base(name, "Linear cluster without subtraction.", "LC")
        },
        "fig3a-subtract-LC3" | "fig3a-subtract-LC2" => {
            let k = name.as_bytes()[name.len() - 1] as usize - b'0' as usize;
            ScenarioConfig {
                subtraction: lab_channel(unit(k), Frame::Basis),
                measurements: all4(),
                ..base(name, "Subtraction in one node of the linear cluster.", "LC")
            }
        }
        "fig3a-superposition" => ScenarioConfig {
            subtraction: lab_channel(vec![[0.0, -0.4], [-0.4, 0.0], [0.0, 0.8], [0.2, 0.0]], Frame::Basis),
            measurements: all4(),
            ..base(name, "Subtraction in -0.4i LC0 - 0.4 LC1 + 0.8i LC2 + 0.2 LC3.", "LC")
        },
        "fig3b-input" => ScenarioConfig {
            measurements: all4(),
            analyses: vec![Analysis::Purity, Analysis::Kurtosis, Analysis::Nullifiers],
            ..base(name, "Square cluster without subtraction.", "SC")
        },
        "fig3b-subtract-SC0" => ScenarioConfig {
            subtraction: lab_channel(unit(0), Frame::Basis),
            measurements: all4(),
            ..base(name, "Subtraction in SC0 of the square cluster.", "SC")
        },
        _ => return None,
    };
    Some(cfg)
}
