use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use probframe_cli::config::{parse_vector_arg, read_text, DEFAULT_DIM, DEFAULT_SAMPLES, DEFAULT_SEED};
use probframe_cli::{
    emit_csv, run, CliError, Command, ConfigError, ExperimentConfig, GaussianCheck, EXIT_CONFIG, EXIT_FAIL,
    EXIT_INTERNAL, EXIT_PASS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "pframe", version, about = "Probabilistic frame verification suites")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Monte-Carlo sample count (also the DPP draw count).
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Truncation dimension of the white-noise ensemble.
    #[arg(long, global = true, default_value_t = DEFAULT_DIM)]
    dim: usize,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Destination for the command's table (paths, draws, plan, sequence).
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Tolerance override `key=value`; repeatable.
    #[arg(long = "tol", global = true, value_parser = parse_tol)]
    tolerances: Vec<(String, f64)>,
}

#[derive(Subcommand)]
enum Sub {
    /// Bounds, operator and Gramian of a frame file.
    Frames { frame: PathBuf },
    /// Exact W2 distance between two measure files.
    Wasserstein { mu: PathBuf, nu: PathBuf },
    /// Lower-bound decay sequence of a measure file.
    Decay {
        measure: PathBuf,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Frame-induced Markov chain and sampled paths.
    Markov {
        #[arg(long)]
        frame: PathBuf,
        /// Zero-based frame index of the start state.
        #[arg(long, conflicts_with = "start_vector")]
        start_index: Option<usize>,
        /// Start state as an inline JSON array or a file.
        #[arg(long)]
        start_vector: Option<String>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Determinantal sampling from a frame or kernel file.
    Dpp {
        #[arg(long, conflicts_with = "kernel", required_unless_present = "kernel")]
        frame: Option<PathBuf>,
        #[arg(long)]
        kernel: Option<PathBuf>,
        #[arg(long)]
        bruteforce: bool,
    },
    /// White-noise identities.
    Gaussian {
        #[arg(long, value_enum, value_delimiter = ',')]
        checks: Option<Vec<GaussianCheck>>,
    },
    /// Translated-measure identities.
    Translate {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Karhunen-Loeve variance of a Parseval frame file.
    Kl {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        x: String,
    },
    /// Every suite with built-in inputs.
    VerifyAll,
    /// Run a JSON experiment config; global flags are ignored except output.
    Run { config: PathBuf },
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.parse().map_err(|e| format!("{v:?}: {e}"))?;
    Ok((k.to_string(), v))
}

fn build_config(cli: Cli) -> Result<(ExperimentConfig, Global), CliError> {
    let g = cli.global;
    let mut c = match &cli.command {
        Sub::Run { config } => {
            return Ok((ExperimentConfig::from_json(&read_text(config)?)?, g));
        }
        Sub::Frames { .. } => ExperimentConfig::new(Command::Frames),
        Sub::Wasserstein { .. } => ExperimentConfig::new(Command::Wasserstein),
        Sub::Decay { .. } => ExperimentConfig::new(Command::Decay),
        Sub::Markov { .. } => ExperimentConfig::new(Command::Markov),
        Sub::Dpp { .. } => ExperimentConfig::new(Command::Dpp),
        Sub::Gaussian { .. } => ExperimentConfig::new(Command::Gaussian),
        Sub::Translate { .. } => ExperimentConfig::new(Command::Translate),
        Sub::Kl { .. } => ExperimentConfig::new(Command::Kl),
        Sub::VerifyAll => ExperimentConfig::new(Command::VerifyAll),
    };
    c.seed = g.seed;
    c.samples = g.samples;
    c.dim = g.dim;
    c.tolerances = g.tolerances.iter().cloned().collect::<BTreeMap<_, _>>();
    match cli.command {
        Sub::Frames { frame } => c.inputs = vec![frame],
        Sub::Wasserstein { mu, nu } => c.inputs = vec![mu, nu],
        Sub::Decay { measure, n_max } => {
            c.inputs = vec![measure];
            c.options.n_max = n_max;
        }
        Sub::Markov { frame, start_index, start_vector, horizon, paths } => {
            c.inputs = vec![frame];
            c.options.start_index = start_index;
            c.options.start_vector = start_vector.as_deref().map(parse_vector_arg).transpose()?;
            c.options.horizon = horizon;
            c.options.paths = paths;
        }
        Sub::Dpp { frame, kernel, bruteforce } => {
            c.inputs = frame.into_iter().chain(kernel).collect();
            c.options.bruteforce = bruteforce;
        }
        Sub::Gaussian { checks } => c.options.checks = checks,
        Sub::Translate { x, y } => {
            c.options.x = Some(parse_vector_arg(&x)?);
            c.options.y = Some(parse_vector_arg(&y)?);
        }
        Sub::Kl { frame, x } => {
            c.inputs = vec![frame];
            c.options.x = Some(parse_vector_arg(&x)?);
        }
        Sub::VerifyAll | Sub::Run { .. } => {}
    }
    c.validate()?;
    Ok((c, g))
}

/// `FRAMES_THREADS` caps the worker pool; results do not depend on it.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FRAMES_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::Invalid(format!("FRAMES_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(io::Error::other(e)))
}

fn writer(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let (config, g) = build_config(cli)?;
    let output = run(&config)?;
    let report = &output.report;
    if config.command == Command::Translate {
        if let Some(x) = &config.options.x {
            let norm_sq: f64 = x.iter().map(|v| v * v).sum();
            if norm_sq > probframe::translation::WIDE_TRANSLATION_NORM_SQ {
                eprintln!("warning: |x|^2 = {norm_sq} > 4; density variance e^(|x|^2) makes 4-sigma bands weak");
            }
        }
    }
    let mut out = writer(g.out.as_ref())?;
    match g.format {
        Format::Json => writeln!(out, "{}", report.to_json())?,
        Format::Csv => emit_csv(report, &mut out)?,
    }
    out.flush()?;
    if let (Some(path), Some(table)) = (g.table.as_ref(), output.table.as_ref()) {
        let mut t = writer(Some(path))?;
        table.write(&mut t)?;
        t.flush()?;
    }
    for r in report.records.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {}: value {} target {} z {:?}", r.name, r.value, r.target, r.z_score);
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match execute(cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!([EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL].contains(&code));
    ExitCode::from(code as u8)
}
