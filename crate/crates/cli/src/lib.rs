//! `fracising` command line: kernel inspection, exponential fits, MPO
//! checks, spectra, gap scans, light cones, scaling fits and the full
//! pipeline, each writing CSV or JSON plus a re-runnable manifest.
//!
//! Exit status is 0 on success, 2 on usage errors and 1 on numerical or IO
//! failures; failures print one line `error: CODE: message` on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

use config::Settings;

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "FRACISING_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(fracising::Error),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "USAGE",
            CliError::Numerical(e) => e.code(),
            CliError::Io(_) => "IO_ERROR",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Numerical(e) => e.to_string(),
        };
        // keep the error on one line
        write!(f, "error: {}: {}", self.code(), msg.replace('\n', " "))
    }
}

impl From<fracising::Error> for CliError {
    fn from(e: fracising::Error) -> Self {
        CliError::Numerical(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracising", version, about = "Fractional-kernel transverse-field Ising chain numerics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Common {
    /// TOML file with the same keys as the flags; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coupling kernel J(r) for r = 1..range
    Kernel(Common),
    /// Exponential-sum compression of the kernel
    Expfit(Common),
    /// Contracted MPO against dense Hamiltonians for L = 2..L
    #[command(name = "mpo-check")]
    MpoCheck(Common),
    /// Momentum-space BdG and mean-field dispersion with small-k slopes
    Dispersion(Common),
    /// Finite-size gaps (quadratic model or ED) over lengths and fields
    #[command(name = "gap-scan")]
    GapScan(Common),
    /// Entanglement light cone after a windowed local drive
    Lightcone(Common),
    /// Fit gap or pseudocritical-drift laws to a CSV
    #[command(name = "scaling-fit")]
    ScalingFit(Common),
    /// kernel → expfit → dispersion, gap scan, light cone → scaling fits
    Pipeline(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Kernel(c) => ("kernel", c),
            Command::Expfit(c) => ("expfit", c),
            Command::MpoCheck(c) => ("mpo-check", c),
            Command::Dispersion(c) => ("dispersion", c),
            Command::GapScan(c) => ("gap-scan", c),
            Command::Lightcone(c) => ("lightcone", c),
            Command::ScalingFit(c) => ("scaling-fit", c),
            Command::Pipeline(c) => ("pipeline", c),
        }
    }
}

/// Worker threads: `FRACISING_THREADS` if set, else the available parallelism.
pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Order-preserving parallel map over `items` on `threads` scoped workers.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let (name, common) = cli.command.parts();
    let file = common.config.as_deref().map(Settings::from_file).transpose()?;
    let settings = config::resolve(name, &common.settings, file.as_ref())?;
    let threads = thread_count()?;
    let report = commands::dispatch(name, &settings, threads)?;
    output::write(&settings, &report)
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Usage(first));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let xs: Vec<usize> = (0..37).collect();
        for t in [1, 2, 5, 64] {
            assert_eq!(par_map(&xs, t, |x| x * x), xs.iter().map(|x| x * x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn error_line_is_single() {
        let e = CliError::Usage("bad\nthing".into());
        assert_eq!(e.to_string(), "error: USAGE: bad thing");
        assert_eq!(CliError::from(fracising::Error::NoFront).code(), "NO_FRONT");
    }
}
