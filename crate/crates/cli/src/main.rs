//! `cfpoisson` experiment runner.

mod config;
mod error;
mod output;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{normalize_key, parse_file, parse_threads, Command, Config, ConfigError, Raw};
use error::AppError;

const THREADS_ENV: &str = "CFPOISSON_THREADS";

#[derive(Parser, Debug)]
#[command(name = "cfpoisson", version, about = "Poisson hit statistics for the Gauss map")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Counts of digits above theta*n (Doeblin)
    Doeblin(Flags),
    /// Runs of m large digits
    Tuples(Flags),
    /// Occurrences of the pattern [j, j]
    Pattern(Flags),
    /// Negative control [1, n] / [n, 1]
    Negcontrol(Flags),
    /// Renewal chain visits to a tail set
    Renewal(Flags),
    /// Perturbed eigenvalue ratio (1 - lambda_n) / ((1 - e^-s) mu(A_n))
    LemmaRatio(Flags),
    /// Escape rate of the open system
    Escape(Flags),
    /// Laplace transform prediction lambda_n^n
    Laplace(Flags),
    /// First hitting times against Exp(1)
    HittingTime(Flags),
    /// Leading eigenvalues of the Ulam matrix
    Spectrum(Flags),
    /// Decay of correlations
    Mixing(Flags),
    /// Short return bound over an exhaustive word family
    Shortret(Flags),
    /// Distortion bound over an exhaustive word family
    Renyi(Flags),
    /// Certified continued fraction digits
    Digits(Flags),
    /// Target measure mu(A_n)
    Measure(Flags),
    /// Run the experiment named by `command` in a config file
    Run(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Config file (key = value lines or a JSON object)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; without it the primary output goes to stdout
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    /// tail, tuple, pattern or negcontrol
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Pattern exponent p/q (digit j = floor(n^(p/q)))
    #[arg(long)]
    exponent: Option<String>,
    /// One value or a comma-separated schedule
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    s: Option<String>,
    /// Ulam grid sizes, comma-separated
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// gauss or lebesgue
    #[arg(long)]
    law: Option<String>,
    /// Poisson reference intensity: limit or t_hat
    #[arg(long)]
    reference: Option<String>,
    /// calibrated, default, poisson:L, geometric:P or power:A
    #[arg(long)]
    branch: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    /// Gaps, e.g. 2..32 or 1,2,4
    #[arg(long)]
    gaps: Option<String>,
    /// Word whose cylinder is A, e.g. 1 or 1,2
    #[arg(long)]
    a: Option<String>,
    /// Interval B as lo:hi, e.g. 0:1/2
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    max_len: Option<String>,
    #[arg(long)]
    max_digit: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    count: Option<String>,
    #[arg(long)]
    lo: Option<String>,
    #[arg(long)]
    hi: Option<String>,
    #[arg(long)]
    trial: Option<String>,
}

impl Flags {
    fn raw(&self) -> Raw {
        let pairs = [
            ("out", &self.out),
            ("threads", &self.threads),
            ("family", &self.family),
            ("theta", &self.theta),
            ("m", &self.m),
            ("exponent", &self.exponent),
            ("n", &self.n),
            ("trials", &self.trials),
            ("s", &self.s),
            ("grid", &self.grid),
            ("seed", &self.seed),
            ("law", &self.law),
            ("reference", &self.reference),
            ("branch", &self.branch),
            ("threshold", &self.threshold),
            ("gaps", &self.gaps),
            ("a", &self.a),
            ("b", &self.b),
            ("max_len", &self.max_len),
            ("max_digit", &self.max_digit),
            ("samples", &self.samples),
            ("count", &self.count),
            ("lo", &self.lo),
            ("hi", &self.hi),
            ("trial", &self.trial),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (normalize_key(k), v.clone())))
            .collect()
    }
}

fn command_of(cmd: &Cmd) -> (Option<Command>, &Flags) {
    match cmd {
        Cmd::Doeblin(f) => (Some(Command::Doeblin), f),
        Cmd::Tuples(f) => (Some(Command::Tuples), f),
        Cmd::Pattern(f) => (Some(Command::Pattern), f),
        Cmd::Negcontrol(f) => (Some(Command::NegControl), f),
        Cmd::Renewal(f) => (Some(Command::Renewal), f),
        Cmd::LemmaRatio(f) => (Some(Command::LemmaRatio), f),
        Cmd::Escape(f) => (Some(Command::Escape), f),
        Cmd::Laplace(f) => (Some(Command::Laplace), f),
        Cmd::HittingTime(f) => (Some(Command::HittingTime), f),
        Cmd::Spectrum(f) => (Some(Command::Spectrum), f),
        Cmd::Mixing(f) => (Some(Command::Mixing), f),
        Cmd::Shortret(f) => (Some(Command::ShortRet), f),
        Cmd::Renyi(f) => (Some(Command::Renyi), f),
        Cmd::Digits(f) => (Some(Command::Digits), f),
        Cmd::Measure(f) => (Some(Command::Measure), f),
        Cmd::Run(f) => (None, f),
    }
}

fn resolve(cmd: &Cmd) -> Result<Config, AppError> {
    let (command, flags) = command_of(cmd);
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            parse_file(&text)?
        }
        None => Raw::new(),
    };
    let command = match command {
        Some(c) => c,
        None => {
            if flags.config.is_none() {
                return Err(ConfigError("run needs --config".into()).into());
            }
            let name = file.get("command").ok_or_else(|| ConfigError("config has no command key".into()))?;
            Command::parse(name)?
        }
    };
    Ok(Config::resolve(command, &file, &flags.raw())?)
}

fn configure_threads(cfg: &Config) -> Result<(), AppError> {
    let threads = match cfg.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(parse_threads(&v).map_err(|e| ConfigError(format!("{THREADS_ENV}: {e}")))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(cmd: &Cmd) -> Result<(), AppError> {
    let cfg = resolve(cmd)?;
    configure_threads(&cfg)?;
    let artifacts = run::run(&cfg)?;
    match &cfg.out {
        Some(dir) => output::write_all(dir, &artifacts)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(artifacts[0].body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
