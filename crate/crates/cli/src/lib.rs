//! Command-line harness for the `probframe` library.
//!
//! [`run`] dispatches an [`ExperimentConfig`] to its suite and assembles a
//! [`Report`]. The binary `pframe` wraps it with argument parsing, output
//! routing and the exit-code contract (0 pass, 1 check failure, 2 config
//! error, 3 internal error).

pub mod config;
pub mod report;
pub mod suites;

use std::time::Instant;

use serde_json::{json, Value};

use probframe::dpp::DppKernel;
use probframe::frames::Frame;
use probframe::measure::DiscreteMeasure;
use probframe::{FrameError, Vector};

pub use config::{Command, ConfigError, ExperimentConfig, GaussianCheck, Tolerances};
pub use report::{emit_csv, parse_csv, Record, Report, Table};

use suites::Outcome;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: FrameError,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Module { .. } | CliError::Io(_) => EXIT_INTERNAL,
        }
    }
}

/// Errors raised while turning inputs into library objects are input errors.
fn input<T>(what: &str, r: probframe::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| ConfigError::Invalid(format!("{what}: {e}")).into())
}

fn module<T>(context: &str, r: probframe::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Module { context: context.to_string(), source })
}

/// A frame file, or a kernel file when the document has a `k` field.
enum FrameOrKernel {
    Frame(Frame),
    Kernel(DppKernel),
}

fn load_frame_or_kernel(path: &std::path::Path) -> Result<FrameOrKernel, CliError> {
    let doc: Value = config::load_json(path)?;
    let parse = |doc: Value| -> Result<FrameOrKernel, serde_json::Error> {
        if doc.get("k").is_some() {
            serde_json::from_value(doc).map(FrameOrKernel::Kernel)
        } else {
            serde_json::from_value(doc).map(FrameOrKernel::Frame)
        }
    };
    parse(doc).map_err(|source| ConfigError::Json { context: path.display().to_string(), source }.into())
}

/// Result of [`run`]: the report plus any tabular side output.
pub struct RunOutput {
    pub report: Report,
    pub table: Option<Table>,
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let started = Instant::now();
    let tol = config.tolerances();
    let name = config.command.to_string();
    let outcome = match config.command {
        config::Command::Frames => {
            let frame: Frame = config::load_json(&config.inputs[0])?;
            module(&name, suites::frames(&frame, config.seed, &tol))?
        }
        config::Command::Wasserstein => {
            let mu: DiscreteMeasure = config::load_json(&config.inputs[0])?;
            let nu: DiscreteMeasure = config::load_json(&config.inputs[1])?;
            if mu.dim() != nu.dim() {
                return Err(ConfigError::Invalid(format!("measure dimensions differ: {} vs {}", mu.dim(), nu.dim())).into());
            }
            module(&name, suites::wasserstein(&mu, &nu, &tol))?
        }
        config::Command::Decay => {
            let mu: DiscreteMeasure = config::load_json(&config.inputs[0])?;
            module(&name, suites::decay(&mu, config.options.n_max.unwrap_or(64), &tol))?
        }
        config::Command::Markov => {
            let frame: Frame = config::load_json(&config.inputs[0])?;
            let start = match (&config.options.start_vector, config.options.start_index) {
                (Some(v), _) => input("start vector", Vector::new(v.clone()))?,
                (None, i) => input("start index", frame.vector(i.unwrap_or(0)).cloned())?,
            };
            if start.dim() != frame.dim() {
                return Err(ConfigError::Invalid(format!("start vector has dimension {}, frame {}", start.dim(), frame.dim())).into());
            }
            let horizon = config.options.horizon.unwrap_or(3);
            let paths = config.options.paths.unwrap_or(config.samples);
            input("markov", probframe::FrameChain::new(frame.clone()).map(drop))?;
            module(&name, suites::markov(frame, &start, horizon, paths, config.seed, &tol))?
        }
        config::Command::Dpp => {
            let kernel = match load_frame_or_kernel(&config.inputs[0])? {
                FrameOrKernel::Frame(f) => input("kernel from frame", DppKernel::from_frame(&f))?,
                FrameOrKernel::Kernel(k) => k,
            };
            module(&name, suites::dpp(&kernel, config.samples, config.seed, config.options.bruteforce, &tol))?
        }
        config::Command::Gaussian => {
            let checks = config.options.checks.clone().unwrap_or_else(|| GaussianCheck::ALL.to_vec());
            module(&name, suites::gaussian(config.dim, config.samples, config.seed, &checks, &tol))?
        }
        config::Command::Translate => {
            let x = input("x", Vector::new(config.options.x.clone().expect("validated")))?;
            let y = input("y", Vector::new(config.options.y.clone().expect("validated")))?;
            require_truncation(config.dim, x.dim().max(y.dim()))?;
            module(&name, suites::translate(&x, &y, config.dim, config.samples, config.seed, &tol))?
        }
        config::Command::Kl => {
            let frame: Frame = config::load_json(&config.inputs[0])?;
            if !frame.is_parseval(tol.ineq) {
                return Err(ConfigError::Invalid(format!(
                    "kl needs a Parseval frame; bounds are [{}, {}]",
                    frame.lower_bound(),
                    frame.upper_bound()
                ))
                .into());
            }
            let x = input("x", Vector::new(config.options.x.clone().expect("validated")))?;
            if x.dim() != frame.dim() {
                return Err(ConfigError::Invalid(format!("x has dimension {}, frame {}", x.dim(), frame.dim())).into());
            }
            module(&name, suites::kl(&frame, &[x], config.dim, config.samples, config.seed, &tol))?
        }
        config::Command::VerifyAll => verify_all(config, &tol)?,
    };
    let report = Report::new(config.clone(), outcome.records, outcome.payload, started.elapsed().as_secs_f64());
    Ok(RunOutput { report, table: outcome.table })
}

fn require_truncation(dim: usize, needed: usize) -> Result<(), CliError> {
    if needed > dim {
        return Err(ConfigError::Invalid(format!("vectors of dimension {needed} exceed truncation dim {dim}")).into());
    }
    Ok(())
}

/// Every suite at the configured seed, sample count and truncation.
fn verify_all(config: &ExperimentConfig, tol: &Tolerances) -> Result<Outcome, CliError> {
    let seed = config.seed;
    let m = config.samples;
    let dim = config.dim;
    let mut records = Vec::new();
    let mut payload = serde_json::Map::new();
    let mut add = |suite: &str, outcome: probframe::Result<Outcome>| -> Result<(), CliError> {
        let outcome = module(suite, outcome)?;
        records.extend(outcome.records.into_iter().map(|r| r.prefixed(suite)));
        payload.insert(suite.to_string(), outcome.payload);
        Ok(())
    };

    let mb = Frame::mercedes_benz();
    add("frames.mercedes_benz", suites::frames(&mb, seed, tol))?;
    add("frames.random", suites::frames(&suites::random_frame(seed, 0, 4, 9), seed, tol))?;

    let start = Vector::new(vec![1.0, 0.5]).expect("finite");
    add("markov.mercedes_benz", suites::markov(mb.clone(), &start, 2, m, seed, tol))?;
    let onb = Frame::orthonormal_basis(3);
    let onb_start = onb.vectors()[0].clone();
    add("markov.orthonormal", suites::markov(onb, &onb_start, 3, 100, seed, tol))?;

    let kernel = module("dpp", DppKernel::from_frame(&suites::random_frame(seed, 1, 3, 5)))?;
    add("dpp", suites::dpp(&kernel, m, seed, true, tol))?;

    add("gaussian", suites::gaussian(dim, m, seed, &GaussianCheck::ALL, tol))?;

    let u = suites::probe_unit(seed, dim, 10);
    let v = suites::probe_unit(seed, dim, 11);
    let v_perp = module("translate", v.sub(&u.scale(u.dot(&v).expect("same dim"))))?;
    let v_perp = v_perp.scale(1.0 / v_perp.norm());
    add("translate.zero_shift", suites::translate(&Vector::zeros(dim), &u, dim, m, seed, tol))?;
    add("translate.orthogonal", suites::translate(&u, &v_perp, dim, m, seed, tol))?;
    add("translate.equal", suites::translate(&u, &u, dim, m, seed, tol))?;

    let parseval = module("kl", mb.parseval_rescale())?;
    let xs: Vec<Vector> = (0..10).map(|i| suites::probe_unit(seed, 2, 20 + i)).collect();
    add("kl", suites::kl(&parseval, &xs, dim, m, seed, tol))?;

    let atoms: Vec<Vector> = (0..5).map(|i| suites::probe_unit(seed, 3, 40 + i).scale(1.0 + i as f64)).collect();
    let mu = module("decay", DiscreteMeasure::uniform(atoms.clone()))?;
    add("decay", suites::decay(&mu, 64, tol))?;
    let shifted: Vec<Vector> = atoms.iter().map(|a| a.scale(0.5)).rev().collect();
    let nu = module("wasserstein", DiscreteMeasure::uniform(shifted))?;
    add("wasserstein", suites::wasserstein(&mu, &nu, tol))?;

    Ok(Outcome { records, payload: Value::Object(payload), table: None })
}

/// Records and payload only: the part of a report that must reproduce bitwise.
pub fn numeric_fingerprint(report: &Report) -> String {
    serde_json::to_string(&json!({ "records": report.records, "payload": report.payload })).expect("serializes")
}
