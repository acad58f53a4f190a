//! Command-line front end: `state`, `correlators`, `sweep`, `optimize` and
//! `validate`.
//!
//! Exit codes: 0 success, 1 invalid input or failed validation checks,
//! 2 numerical failure (quadrature, cross-check or a broken state
//! invariant). Errors go to stderr as a single JSON object.

pub mod config;
pub mod validation;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{Config, ConfigError};
use harvest_core::correlators::{self, CorrelatorMethod, CorrelatorSet, Pair};
use harvest_core::density::{DensityMatrix8, BASIS};
use harvest_core::entanglement::{self, EntanglementReport, ReportJson};
use harvest_core::linalg::{CMatrix, Complex64};
use harvest_core::pipeline::{self, PipelineError};
use harvest_core::scenario::{Label, ScenarioConfig, ScenarioError, SmearingNorm};
use harvest_core::sweep::{self, Configuration, SweepError, SweepSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config {
        path: String,
        #[source]
        source: ConfigError,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("state file: {0}")]
    StateFile(String),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Pipeline(_) => EXIT_NUMERICAL,
            CliError::Sweep(SweepError::Pipeline(_)) => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Scenario(_) => "scenario",
            CliError::Sweep(SweepError::Pipeline(_)) | CliError::Pipeline(_) => "numerical",
            CliError::Sweep(_) => "sweep",
            CliError::Io { .. } => "io",
            CliError::StateFile(_) => "state_file",
            CliError::ValidationFailed(_) => "validation",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
        .to_string()
    }
}

const ABOUT: &str = "Exact tripartite entanglement harvested by three delta-switched \
Unruh-DeWitt detectors from the massless scalar vacuum in 3+1 dimensions.\n\n\
All lengths, times and widths are in units of the switching strength eta; gaps in 1/eta.\n\
Exit codes: 0 success, 1 invalid input or failed checks, 2 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "harvest", version, about = ABOUT)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Closed,
    Quadrature,
    Checked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    Peak,
    Unit,
}

impl From<Norm> for SmearingNorm {
    fn from(n: Norm) -> Self {
        match n {
            Norm::Peak => SmearingNorm::Peak,
            Norm::Unit => SmearingNorm::Unit,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output file (default: stdout)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Relative quadrature tolerance (default 1e-10)
    #[arg(long, value_name = "TOL")]
    pub quad_tol: Option<f64>,
    /// Hermiticity tolerance for eigen-decompositions (default 1e-12)
    #[arg(long, value_name = "TOL")]
    pub eigen_tol: Option<f64>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Scenario/template config file (key = value, dotted keys)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Figure preset: fig2, fig3, fig4, fig5, fig5-reversed
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Final three-detector state and its entanglement report
    State {
        /// Scenario config file (key = value, dotted keys)
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// The nine correlator scalars (ln f, Theta, omega) of a scenario
    Correlators {
        /// Scenario config file (key = value, dotted keys)
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "checked")]
        method: Method,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a one- or two-axis parameter grid
    Sweep {
        #[command(flatten)]
        source: Source,
        /// `NAME MIN MAX COUNT`, NAME one of L, T, lambda, T_C, T_BC, L_AC, L_AB, sigma, Omega
        #[arg(long)]
        axis1: Option<String>,
        /// Second axis, same form as --axis1
        #[arg(long)]
        axis2: Option<String>,
        /// Comma list of triangle, line
        #[arg(long)]
        configuration: Option<String>,
        /// Comma list of pi, negativities, correlators
        #[arg(long)]
        outputs: Option<String>,
        /// Smearing profile normalization for the template
        #[arg(long, value_enum)]
        normalization: Option<Norm>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Add a wall_time_s column (makes output non-reproducible)
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Coupling lambda that maximizes the pi-tangle
    Optimize {
        #[command(flatten)]
        source: Source,
        /// triangle or line (default: first configuration of the source)
        #[arg(long)]
        configuration: Option<String>,
        /// `LO:HI` search interval for lambda
        #[arg(long)]
        bracket: Option<String>,
        #[arg(long, value_enum)]
        normalization: Option<Norm>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Run the seeded invariant suite
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random scenarios to draw
        #[arg(long, default_value_t = validation::DEFAULT_SCENARIOS)]
        scenarios: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Test hook: negate Theta_AB before assembling states
        #[arg(long)]
        flip_theta: bool,
        /// Output file (default: stdout)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn read_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Config::parse(&text).map_err(|source| CliError::Config {
        path: path.display().to_string(),
        source,
    })
}

fn apply_tolerances(cfg: &mut Config, common: &Common) {
    if let Some(t) = common.quad_tol {
        cfg.tolerances.quadrature = t;
    }
    if let Some(t) = common.eigen_tol {
        cfg.tolerances.eigen = t;
    }
}

fn load_scenario(path: &Path, common: &Common) -> Result<ScenarioConfig, CliError> {
    let mut cfg = read_config(path)?;
    apply_tolerances(&mut cfg, common);
    cfg.tolerances.validate()?;
    cfg.scenario().map_err(|source| CliError::Config {
        path: path.display().to_string(),
        source,
    })
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io {
                    path: "<stdout>".into(),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

/// JSON form of the `state` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    /// Basis states, qubit order A, B, C.
    pub basis: Vec<String>,
    /// Caller label of each qubit of `rho` (switching order).
    pub qubit_labels: [Label; 3],
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
    pub report: ReportJson,
    pub min_eigenvalue: f64,
    pub scenario: ScenarioConfig,
}

pub fn state_json(e: &pipeline::Evaluation) -> Result<StateJson, CliError> {
    let m = e.rho.entries();
    let diag = e
        .rho
        .diagnostics()
        .map_err(|err| PipelineError::Density(err.into()))?;
    Ok(StateJson {
        basis: BASIS
            .iter()
            .map(|b| b.iter().map(|q| q.to_string()).collect())
            .collect(),
        qubit_labels: e.scenario.permutation(),
        rho_re: (0..8)
            .map(|i| (0..8).map(|j| m[(i, j)].re).collect())
            .collect(),
        rho_im: (0..8)
            .map(|i| (0..8).map(|j| m[(i, j)].im).collect())
            .collect(),
        report: e.report.to_json_schema(),
        min_eigenvalue: diag.min_eigenvalue,
        scenario: e.scenario,
    })
}

/// Re-analyze a `state --format json` document from its matrix alone.
pub fn report_from_state_json(text: &str) -> Result<EntanglementReport, CliError> {
    let doc: StateJson =
        serde_json::from_str(text).map_err(|e| CliError::StateFile(e.to_string()))?;
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == 8 && rows.iter().all(|r| r.len() == 8);
    if !shape_ok(&doc.rho_re) || !shape_ok(&doc.rho_im) {
        return Err(CliError::StateFile("rho must be 8x8".into()));
    }
    let m = CMatrix::from_fn(8, |i, j| Complex64::new(doc.rho_re[i][j], doc.rho_im[i][j]));
    let rho = DensityMatrix8::from_basis_order(m);
    let report = entanglement::pi_tangle(&rho).map_err(|e| PipelineError::Entanglement(e))?;
    Ok(report.relabel(doc.qubit_labels))
}

fn state_text(e: &pipeline::Evaluation) -> String {
    let mut out = String::from("# rho in basis |ABC> (detectors in switching order: ");
    let labels: Vec<String> = e
        .scenario
        .permutation()
        .iter()
        .map(|l| l.to_string())
        .collect();
    out += &format!("{})\n", labels.join(", "));
    let m = e.rho.entries();
    for (i, b) in BASIS.iter().enumerate() {
        out += &format!("|{}{}{}>", b[0], b[1], b[2]);
        for j in 0..8 {
            let z = m[(i, j)];
            out += &format!("  {:+.6e}{:+.6e}i", z.re, z.im);
        }
        out.push('\n');
    }
    out + &report_text(&e.report)
}

fn report_text(r: &EntanglementReport) -> String {
    let j = r.to_json_schema();
    let n = j.negativity;
    format!(
        "N_A(BC) = {:.12e}\nN_B(AC) = {:.12e}\nN_C(AB) = {:.12e}\nN_A(B)  = {:.12e}\nN_A(C)  = {:.12e}\nN_B(C)  = {:.12e}\n\
         pi_A = {:.12e}\npi_B = {:.12e}\npi_C = {:.12e}\npi   = {:.12e}\n",
        n.a_bc, n.b_ac, n.c_ab, n.a_b, n.a_c, n.b_c, j.pi.a, j.pi.b, j.pi.c, j.pi.total
    )
}

#[derive(Debug, Serialize)]
struct CorrelatorJson {
    /// Caller label for each switching slot.
    order: [Label; 3],
    log_f: [f64; 3],
    f: [f64; 3],
    theta: [f64; 3],
    omega: [f64; 3],
    pairs: [&'static str; 3],
    quadrature_err: f64,
    cross_check_discrepancy: f64,
}

fn correlators_output(s: &ScenarioConfig, c: &CorrelatorSet, format: Format) -> String {
    let order = s.permutation();
    match format {
        Format::Json => {
            let doc = CorrelatorJson {
                order,
                log_f: c.log_f,
                f: c.log_f.map(f64::exp),
                theta: c.theta,
                omega: c.omega,
                pairs: Pair::ALL.map(|p| p.as_str()),
                quadrature_err: c.err,
                cross_check_discrepancy: c.discrepancy,
            };
            serde_json::to_string_pretty(&doc).expect("plain values serialize") + "\n"
        }
        _ => {
            let mut out = String::new();
            for l in Label::ALL {
                out += &format!("ln f_{} = {:.16e}\n", order[l.index()], c.log_f[l.index()]);
            }
            for p in Pair::ALL {
                let (d, e) = p.labels();
                let name = format!("{}{}", order[d.index()], order[e.index()]);
                out += &format!("theta_{name} = {:.16e}\n", c.theta[p.index()]);
                out += &format!("omega_{name} = {:.16e}\n", c.omega[p.index()]);
            }
            out += &format!(
                "quadrature_err = {:.3e}\ncross_check_discrepancy = {:.3e}\n",
                c.err, c.discrepancy
            );
            out
        }
    }
}

fn sweep_source(source: &Source, common: &Common) -> Result<(SweepSpec, Option<Config>), CliError> {
    match (&source.preset, &source.config) {
        (Some(name), None) => {
            let mut spec = sweep::preset(name)?;
            if let Some(t) = common.quad_tol {
                spec.template.tolerances.quadrature = t;
            }
            if let Some(t) = common.eigen_tol {
                spec.template.tolerances.eigen = t;
            }
            Ok((spec, None))
        }
        (None, Some(path)) => {
            let mut cfg = read_config(path)?;
            apply_tolerances(&mut cfg, common);
            let configurations = if cfg.configurations.is_empty() {
                vec![Configuration::Triangle]
            } else {
                cfg.configurations.clone()
            };
            let spec = SweepSpec {
                configurations,
                template: cfg.template(),
                axis1: cfg.axis1.unwrap_or(sweep::AxisRange::new(
                    sweep::Axis::Lambda,
                    0.1,
                    30.0,
                    201,
                )),
                axis2: cfg.axis2,
                outputs: cfg.outputs.unwrap_or_default(),
            };
            Ok((spec, Some(cfg)))
        }
        _ => Err(CliError::Usage(
            "exactly one of --preset and --config is required".into(),
        )),
    }
}

fn usage<T>(r: Result<T, String>) -> Result<T, CliError> {
    r.map_err(CliError::Usage)
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::State {
            config,
            format,
            common,
        } => {
            let scenario = load_scenario(&config, &common)?;
            let e = pipeline::evaluate(&scenario)?;
            let text = match format {
                Format::Json => {
                    serde_json::to_string_pretty(&state_json(&e)?).expect("plain values serialize")
                        + "\n"
                }
                Format::Text => state_text(&e),
                Format::Csv => return Err(CliError::Usage("state supports text and json".into())),
            };
            emit(&common.output, &text)
        }
        Command::Correlators {
            config,
            method,
            format,
            common,
        } => {
            let scenario = load_scenario(&config, &common)?;
            let method = match method {
                Method::Closed => CorrelatorMethod::ClosedForm,
                Method::Quadrature => CorrelatorMethod::Quadrature,
                Method::Checked => CorrelatorMethod::CrossChecked,
            };
            let c =
                correlators::correlators_with(&scenario, method).map_err(PipelineError::from)?;
            if format == Format::Csv {
                return Err(CliError::Usage("correlators supports text and json".into()));
            }
            emit(&common.output, &correlators_output(&scenario, &c, format))
        }
        Command::Sweep {
            source,
            axis1,
            axis2,
            configuration,
            outputs,
            normalization,
            format,
            timing,
            common,
        } => {
            let (mut spec, _) = sweep_source(&source, &common)?;
            if let Some(a) = axis1 {
                spec.axis1 = usage(config::parse_axis(&a))?;
            }
            if let Some(a) = axis2 {
                spec.axis2 = Some(usage(config::parse_axis(&a))?);
            }
            if let Some(c) = configuration {
                spec.configurations = usage(config::parse_configurations(&c))?;
            }
            if let Some(o) = outputs {
                spec.outputs = usage(config::parse_outputs(&o))?;
            }
            if let Some(n) = normalization {
                spec.template.normalization = n.into();
            }
            spec.template.tolerances.validate()?;
            let rows = sweep::run_sweep(&spec)?;
            let text = match format {
                Format::Csv => sweep::write_csv(&spec, &rows, timing),
                Format::Json => sweep::write_json(&spec, &rows, timing) + "\n",
                Format::Text => sweep::write_csv(&spec, &rows, timing).replace(',', "\t"),
            };
            emit(&common.output, &text)
        }
        Command::Optimize {
            source,
            configuration,
            bracket,
            normalization,
            format,
            common,
        } => {
            let (mut spec, cfg) = sweep_source(&source, &common)?;
            if let Some(n) = normalization {
                spec.template.normalization = n.into();
            }
            spec.template.tolerances.validate()?;
            let kind = match configuration {
                Some(c) => usage(c.parse::<Configuration>())?,
                None => spec.configurations[0],
            };
            let bracket = match bracket {
                Some(b) => usage(config::parse_bracket(&b))?,
                None => match cfg.and_then(|c| c.bracket) {
                    Some(b) => b,
                    None if spec.axis1.axis == sweep::Axis::Lambda => {
                        (spec.axis1.min, spec.axis1.max)
                    }
                    None => (0.1, 30.0),
                },
            };
            let best = sweep::optimize_lambda(kind, &spec.template, bracket)?;
            let text = match format {
                Format::Json => {
                    let doc = serde_json::json!({
                        "configuration": kind.as_str(),
                        "bracket": [bracket.0, bracket.1],
                        "lambda": best.lambda,
                        "pi": best.pi,
                        "unimodal": best.unimodal,
                        "evaluations": best.evaluations,
                    });
                    serde_json::to_string_pretty(&doc).expect("plain values serialize") + "\n"
                }
                _ => format!(
                    "configuration = {}\nlambda* = {:.6}\npi* = {:.12e}\nunimodal = {}\nevaluations = {}\n",
                    kind, best.lambda, best.pi, best.unimodal, best.evaluations
                ),
            };
            emit(&common.output, &text)
        }
        Command::Validate {
            seed,
            scenarios,
            format,
            flip_theta,
            output,
        } => {
            let report = validation::run_validation_suite_with(validation::ValidationOptions {
                seed,
                scenarios,
                flip_theta,
            });
            let text = match format {
                Format::Json => {
                    serde_json::to_string_pretty(&report).expect("plain values serialize") + "\n"
                }
                _ => {
                    let mut out = format!("seed {seed}\n");
                    for c in &report.checks {
                        out += &format!(
                            "{} {:<26} observed {:.3e} tolerance {:.1e} over {}{}\n",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.name,
                            c.observed,
                            c.tolerance,
                            c.samples,
                            if c.detail.is_empty() {
                                String::new()
                            } else {
                                format!(" ({})", c.detail)
                            }
                        );
                    }
                    out
                }
            };
            emit(&output, &text)?;
            if report.passed() {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name)
                    .collect();
                Err(CliError::ValidationFailed(failed.join(", ")))
            }
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}
