use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use mpsub::homodyne::QuadratureDataset;
use mpsub::scenario::{self, presets, Report, ScenarioConfig, ScenarioError, Stage};
use mpsub::tomography::{reconstruct, report_observables, TomographyConfig};

#[derive(Parser)]
#[command(name = "mpsub", version, about = "Mode-selective photon subtraction from multimode Gaussian light")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where reports, grids and datasets are written.
    #[arg(long, global = true, env = "MPSUB_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also run the multimode Fock oracle and report the deviations.
    #[arg(long, global = true)]
    cross_validate: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a named preset.
    Simulate { config: String },
    /// Maximum-likelihood reconstruction from a `theta,x` dataset.
    Tomography {
        dataset: PathBuf,
        /// Efficiency in the measurement operators (default: the dataset's).
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 10)]
        cutoff: usize,
    },
    /// Entanglement witnesses and validation of the input state.
    Criteria { config: String },
    /// Wigner grid of one basis mode after the channel.
    Wigner {
        config: String,
        #[arg(long)]
        mode: usize,
        /// `.csv` for text rows; anything else gets a JSON header plus `.bin`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Shipped scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset as a config file.
    Export { name: String },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure { code: if e.is_config() { 2 } else { 1 }, message: e.to_string() }
    }
}

fn fail(stage: &str, what: impl std::fmt::Display) -> Failure {
    Failure { code: 1, message: format!("[{stage}] {what}") }
}

fn config_failure(what: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: format!("[config] {what}") }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mpsub: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate { config } => simulate(cli, config),
        Command::Tomography { dataset, eta, cutoff } => tomography(cli, dataset, *eta, *cutoff),
        Command::Criteria { config } => {
            let cfg = load(cli, config)?;
            let (state, criteria) = scenario::criteria(&cfg)?;
            emit(cli, &json!({ "name": cfg.name, "state": state, "criteria": criteria }))
        }
        Command::Wigner { config, mode, out } => {
            let cfg = load(cli, config)?;
            let grid = scenario::mode_wigner(&cfg, *mode)?;
            let out = match &cli.out_dir {
                Some(d) if out.is_relative() => {
                    create_dir(d)?;
                    d.join(out)
                }
                _ => out.clone(),
            };
            let written = if out.extension().is_some_and(|e| e == "csv") {
                grid.write_csv(&out).map(|_| out.clone())
            } else {
                grid.write_binary(&out).map(|_| out.clone())
            }
            .map_err(|e| fail("output", format!("{}: {e}", out.display())))?;
            emit(
                cli,
                &json!({
                    "mode": mode,
                    "file": written.display().to_string(),
                    "grid": grid.spec,
                    "w0": grid.w0,
                    "integral": grid.integral(),
                    "min": grid.min_value(),
                }),
            )
        }
        Command::Presets { action: PresetAction::List } => {
            for name in presets::names() {
                let cfg = presets::get(name).expect("listed presets exist");
                println!("{name:<22} {}", cfg.description);
            }
            Ok(())
        }
        Command::Presets { action: PresetAction::Export { name } } => {
            let cfg = presets::get(name).ok_or_else(|| config_failure(format!("no preset named `{name}`")))?;
            print!("{}", cfg.to_json());
            Ok(())
        }
    }
}

/// A config file, or a preset name when no such file exists.
fn load(cli: &Cli, arg: &str) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(arg);
    let mut cfg = if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| config_failure(format!("{arg}: {e}")))?;
        ScenarioConfig::from_json(&text).map_err(|e| ScenarioError { context: Some(arg.to_string()), ..e })?
    } else if let Some(cfg) = presets::get(arg.trim_end_matches(".json")) {
        cfg
    } else {
        return Err(config_failure(format!("{arg}: no such file or preset (see `mpsub presets list`)")));
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.cross_validate |= cli.cross_validate;
    Ok(cfg)
}

fn create_dir(d: &Path) -> Result<(), Failure> {
    fs::create_dir_all(d).map_err(|e| fail("output", format!("{}: {e}", d.display())))
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '+' { c } else { '_' }).collect()
}

fn simulate(cli: &Cli, arg: &str) -> Result<(), Failure> {
    let cfg = load(cli, arg)?;
    let mut report = scenario::run(&cfg)?;
    if let Some(dir) = &cli.out_dir {
        let dir = dir.join(file_stem(&cfg.name));
        create_dir(&dir)?;
        write_artifacts(&dir, &mut report)?;
        let (name, body) = match cli.format {
            Format::Json => ("report.json", report.to_json()),
            Format::Csv => ("report.csv", report.to_csv()),
        };
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| fail("output", format!("{}: {e}", path.display())))?;
    }
    match cli.format {
        Format::Json => print!("{}", report.to_json()),
        Format::Csv => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn write_artifacts(dir: &Path, report: &mut Report) -> Result<(), Failure> {
    for (i, m) in report.measurements.iter_mut().enumerate() {
        let stem = format!("{i}-{}", file_stem(&m.label));
        if let (Some(grid), Some(summary)) = (&m.wigner_grid, m.wigner.as_mut()) {
            let path = dir.join(format!("wigner-{stem}.json"));
            grid.write_binary(&path).map_err(|e| fail("output", format!("{}: {e}", path.display())))?;
            summary.file = Some(path.file_name().unwrap().to_string_lossy().into_owned());
        }
        if let Some(data) = &m.dataset {
            let path = dir.join(format!("data-{stem}.csv"));
            data.write_csv(&path).map_err(|e| fail("output", format!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn tomography(cli: &Cli, dataset: &Path, eta: Option<f64>, cutoff: usize) -> Result<(), Failure> {
    let data = QuadratureDataset::read_csv(dataset).map_err(|e| config_failure(format!("{}: {e}", dataset.display())))?;
    let cfg = TomographyConfig { cutoff, eta: eta.unwrap_or(data.efficiency), ..Default::default() };
    cfg.validate().map_err(config_failure)?;
    let res = reconstruct(&data, &cfg).map_err(|e| fail(&Stage::Tomography.to_string(), e))?;
    let obs = report_observables(&res.state, None).map_err(|e| fail(&Stage::Analysis.to_string(), e))?;
    let m = res.state.matrix();
    let density: Vec<Vec<[f64; 2]>> = (0..cutoff).map(|i| (0..cutoff).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    let out = json!({
        "dataset": dataset.display().to_string(),
        "samples": data.len(),
        "cutoff": cutoff,
        "eta": cfg.eta,
        "iterations": res.iterations,
        "converged": res.converged,
        "operators": res.operators,
        "log_likelihood": res.log_likelihood.last(),
        "w0": obs.w0,
        "purity": obs.purity,
        "excess_kurtosis": obs.excess_kurtosis,
        "density": density,
    });
    if cli.format == Format::Csv {
        println!("samples,cutoff,eta,iterations,converged,w0,purity,excess_kurtosis");
        println!(
            "{},{},{},{},{},{},{},{}",
            data.len(),
            cutoff,
            cfg.eta,
            res.iterations,
            res.converged,
            obs.w0,
            obs.purity,
            obs.excess_kurtosis
        );
    } else {
        println!("{}", serde_json::to_string_pretty(&out).expect("json value"));
    }
    if let Some(dir) = &cli.out_dir {
        create_dir(dir)?;
        let stem = dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
        let path = dir.join(format!("{stem}-tomography.json"));
        fs::write(&path, serde_json::to_string_pretty(&out).expect("json value") + "\n")
            .map_err(|e| fail("output", format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn emit(cli: &Cli, value: &serde_json::Value) -> Result<(), Failure> {
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("json value")),
        Format::Csv => {
            // flat key,value rows
            println!("key,value");
            flatten("", value, &mut |k, v| println!("{k},{v}"));
        }
    }
    Ok(())
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut dyn FnMut(&str, &str)) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        serde_json::Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        serde_json::Value::Null => {}
        other => out(prefix, &other.to_string()),
    }
}
