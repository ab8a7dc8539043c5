//! Experiment runner behind the `ampliclone` binary.
//!
//! Every subcommand produces a [`Report`]: an echo of the [`RunConfig`], a
//! flat map of named [`Metric`]s, the wall time and the crate version. The
//! process exits 0 when every thresholded metric passes, 1 when one fails
//! and 2 on an invalid configuration.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

mod commands;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_THRESHOLD: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Experiment {
    Linindep,
    AmplifyGame,
    AmplifyBounds,
    Codes,
    PovmVerify,
    HidingVerify,
    TwirlVerify,
    PurifyVerify,
    StabgenVerify,
    WernerVerify,
    CloneGame,
    AllAcceptance,
}

#[derive(Parser, Debug)]
#[command(name = "ampliclone", version, about = "Structured sample amplification and cloning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Probability that n uniform vectors in GF(2)^n are independent.
    Linindep(Flags),
    /// Distinguishing advantage against amplifiers from t to t+1 samples.
    AmplifyGame(Flags),
    /// Lower bounds and the minimax bracket for parity amplification.
    AmplifyBounds(Flags),
    /// Distance, erasure probabilities and coding bounds of the parity code.
    Codes(Flags),
    /// Projector and character-sum forms of the character POVM.
    PovmVerify(Flags),
    /// sigma_L hides L for every Lagrangian subspace.
    HidingVerify(Flags),
    /// The group twirl commutes with the representation.
    TwirlVerify(Flags),
    /// Purification channel against the direct average.
    PurifyVerify(Flags),
    /// Stabilizer generators of the purified states.
    StabgenVerify(Flags),
    /// Worst-case fidelity of the symmetric cloner.
    WernerVerify(Flags),
    /// Distinguishing advantage against cloners producing t copies from t-1.
    CloneGame(Flags),
    /// Every acceptance scenario in one report.
    AllAcceptance(Flags),
}

#[derive(Args, Debug, Clone)]
struct Flags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Restrict amplify-game to one amplifier.
    #[arg(long)]
    amplifier: Option<String>,
    /// Restrict clone-game to one cloner.
    #[arg(long)]
    cloner: Option<String>,
}

/// Validated run parameters, echoed in the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Experiment,
    pub n: Option<usize>,
    pub t: Option<usize>,
    /// Monte Carlo trials; `None` in exact mode.
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub mode: Mode,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub amplifier: Option<String>,
    pub cloner: Option<String>,
}

impl RunConfig {
    fn from_flags(subcommand: Experiment, f: Flags) -> Result<Self, CliError> {
        if f.mode == Mode::Mc && f.seed.is_none() {
            return Err(CliError::Invalid("--seed is required with --mode mc".into()));
        }
        if f.trials == Some(0) {
            return Err(CliError::Invalid("--trials must be positive".into()));
        }
        let trials = match f.mode {
            Mode::Exact => None,
            Mode::Mc => Some(f.trials.unwrap_or(commands::DEFAULT_TRIALS)),
        };
        Ok(RunConfig {
            subcommand,
            n: f.n,
            t: f.t,
            trials,
            seed: f.seed,
            mode: f.mode,
            output: f.output,
            format: f.format,
            amplifier: f.amplifier,
            cloner: f.cloner,
        })
    }
}

/// One named figure. `threshold`, `tolerance` and `pass` are present only
/// when the figure is checked against an acceptance target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub tolerance: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: Option<bool>,
}

impl Metric {
    /// Unchecked figure.
    pub fn info(value: f64) -> Self {
        Metric {
            value,
            tolerance: None,
            threshold: None,
            pass: None,
        }
    }

    /// Passes when `value >= threshold - tolerance`.
    pub fn at_least(value: f64, threshold: f64, tolerance: f64) -> Self {
        Metric {
            value,
            tolerance: Some(tolerance),
            threshold: Some(threshold),
            pass: Some(value >= threshold - tolerance),
        }
    }

    /// Passes when `value <= threshold + tolerance`.
    pub fn at_most(value: f64, threshold: f64, tolerance: f64) -> Self {
        Metric {
            value,
            tolerance: Some(tolerance),
            threshold: Some(threshold),
            pass: Some(value <= threshold + tolerance),
        }
    }

    /// Passes when `|value - target| <= tolerance`.
    pub fn close_to(value: f64, target: f64, tolerance: f64) -> Self {
        Metric {
            value,
            tolerance: Some(tolerance),
            threshold: Some(target),
            pass: Some((value - target).abs() <= tolerance),
        }
    }

    /// A yes/no check recorded as 1 or 0.
    pub fn check(ok: bool) -> Self {
        Metric {
            value: if ok { 1.0 } else { 0.0 },
            tolerance: None,
            threshold: Some(1.0),
            pass: Some(ok),
        }
    }
}

pub type Metrics = BTreeMap<String, Metric>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: RunConfig,
    pub metrics: Metrics,
    /// Excluded from determinism comparisons.
    pub wall_time_secs: f64,
}

impl Report {
    /// Whether every thresholded metric passes.
    pub fn passed(&self) -> bool {
        self.metrics.values().all(|m| m.pass != Some(false))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are finite");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Report> {
        serde_json::from_str(s)
    }

    /// One row per metric: `metric,value,tolerance,threshold,pass`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "value", "tolerance", "threshold", "pass"])
            .expect("in-memory write");
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for (name, m) in &self.metrics {
            w.write_record([
                name.clone(),
                m.value.to_string(),
                opt(m.tolerance),
                opt(m.threshold),
                m.pass.map(|p| p.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }

    pub fn render(&self) -> String {
        match self.config.format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Core(ampliclone_core::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ampliclone_core::Error> for CliError {
    fn from(e: ampliclone_core::Error) -> Self {
        CliError::Core(e)
    }
}

/// Parses `argv` (program name first) into a validated configuration.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (which, flags) = match cli.command {
        Command::Linindep(f) => (Experiment::Linindep, f),
        Command::AmplifyGame(f) => (Experiment::AmplifyGame, f),
        Command::AmplifyBounds(f) => (Experiment::AmplifyBounds, f),
        Command::Codes(f) => (Experiment::Codes, f),
        Command::PovmVerify(f) => (Experiment::PovmVerify, f),
        Command::HidingVerify(f) => (Experiment::HidingVerify, f),
        Command::TwirlVerify(f) => (Experiment::TwirlVerify, f),
        Command::PurifyVerify(f) => (Experiment::PurifyVerify, f),
        Command::StabgenVerify(f) => (Experiment::StabgenVerify, f),
        Command::WernerVerify(f) => (Experiment::WernerVerify, f),
        Command::CloneGame(f) => (Experiment::CloneGame, f),
        Command::AllAcceptance(f) => (Experiment::AllAcceptance, f),
    };
    RunConfig::from_flags(which, flags)
        .map_err(|e| clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{e}\n")))
}

/// Runs the experiment named in `config`.
pub fn execute(config: RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let metrics = commands::run(&config)?;
    if let Some((name, _)) = metrics.iter().find(|(_, m)| !m.value.is_finite()) {
        return Err(CliError::Invalid(format!("metric {name} is not finite")));
    }
    Ok(Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        metrics,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_config(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let report = match execute(config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let text = report.render();
    let written = match &report.config.output {
        Some(path) => std::fs::write(path, &text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {}", CliError::Io(e));
        return EXIT_INVALID;
    }
    for (name, m) in report.metrics.iter().filter(|(_, m)| m.pass == Some(false)) {
        eprintln!("FAIL {name}: value {} threshold {:?}", m.value, m.threshold);
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_THRESHOLD
    }
}
