//! `kinkcorr`: plot data for kink statistics after Ising-chain ramps.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Layer, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration; exit status 2.
    Usage(String),
    /// Failure while computing or writing; exit status 1.
    Runtime(String),
}

impl From<kinkcorr::Error> for CliError {
    fn from(e: kinkcorr::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "kinkcorr",
    version,
    about = "Kink statistics after transverse-field ramps of the quantum Ising chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Quench time; a comma-separated list for `sweep`.
    #[arg(long)]
    tau_q: Option<String>,
    /// Initial transverse field [default: 10].
    #[arg(long)]
    g0: Option<String>,
    /// Chain length [default: max(2000, 40 ξ̂), at least 8 l_w after a halt].
    #[arg(long)]
    n: Option<String>,
    /// Field at which the ramp halts.
    #[arg(long)]
    halt_g: Option<String>,
    /// Waiting time at the halt; a comma-separated list for `sweep`.
    #[arg(long)]
    halt_t: Option<String>,
    /// Largest distance.
    #[arg(long)]
    rmax: Option<String>,
    #[arg(long)]
    rel_tol: Option<String>,
    #[arg(long)]
    abs_tol: Option<String>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Excitation probabilities against the Landau-Zener forms.
    Spectrum(Common),
    /// Scaled kink-kink correlators.
    Correlator {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of exact, approx, analytic, analytic_halted, dephased.
        #[arg(long)]
        kinds: Option<String>,
    },
    /// Density and dephasing length over quench and waiting times.
    Sweep(Common),
    /// Connected multi-kink correlator after dephasing.
    Higher {
        #[command(flatten)]
        common: Common,
        /// Comma-separated kink positions.
        #[arg(long, allow_hyphen_values = true)]
        positions: Option<String>,
    },
    /// Spin-spin correlator from Toeplitz determinants.
    Spinspin {
        #[command(flatten)]
        common: Common,
        /// Fit the damped-oscillation asymptote over [ξ̂, 5ξ̂].
        #[arg(long)]
        fit: bool,
    },
    /// Exact diagonalization against the free-fermion pipeline.
    Oracle(Common),
}

impl Common {
    fn layer(&self) -> Layer {
        let fields = [
            ("tau_q", &self.tau_q),
            ("g0", &self.g0),
            ("n", &self.n),
            ("halt_g", &self.halt_g),
            ("halt_t", &self.halt_t),
            ("rmax", &self.rmax),
            ("rel_tol", &self.rel_tol),
            ("abs_tol", &self.abs_tol),
            ("out", &self.out),
            ("format", &self.format),
        ];
        fields.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect()
    }
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var("KZ_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("KZ_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common, extra) = match &cli.command {
        Command::Spectrum(c) => ("spectrum", c, Layer::new()),
        Command::Correlator { common, kinds } => ("correlator", common, opt_layer("kinds", kinds)),
        Command::Sweep(c) => ("sweep", c, Layer::new()),
        Command::Higher { common, positions } => ("higher", common, opt_layer("positions", positions)),
        Command::Spinspin { common, fit } => {
            ("spinspin", common, if *fit { opt_layer("fit", &Some("true".into())) } else { Layer::new() })
        }
        Command::Oracle(c) => ("oracle", c, Layer::new()),
    };
    let file = match &common.config {
        Some(path) => config::parse_config_file(path)?,
        None => Layer::new(),
    };
    let mut flags = common.layer();
    flags.extend(extra);
    let cfg = RunConfig::resolve(&file, &flags)?;
    let threads = threads()?;
    let mut table = kinkcorr::with_threads(threads, || match &cli.command {
        Command::Spectrum(_) => commands::spectrum(&cfg),
        Command::Correlator { .. } => commands::correlator(&cfg),
        Command::Sweep(_) => commands::sweep(&cfg),
        Command::Higher { .. } => commands::higher(&cfg),
        Command::Spinspin { .. } => commands::spinspin(&cfg),
        Command::Oracle(_) => commands::oracle(&cfg),
    })?;

    let mut meta = vec![
        ("kinkcorr".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("command".to_string(), name.to_string()),
    ];
    meta.extend(cfg.describe(name));
    meta.append(&mut table.meta);
    table.meta = meta;
    let text = table.render(cfg.format);
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}"))),
    }
}

fn opt_layer(key: &str, value: &Option<String>) -> Layer {
    value.iter().map(|v| (key.to_string(), v.clone())).collect()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("kinkcorr: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("kinkcorr: {m}");
            ExitCode::from(1)
        }
    }
}
