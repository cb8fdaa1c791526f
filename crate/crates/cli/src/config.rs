//! Run settings shared by every subcommand.
//!
//! Flags and config-file keys are the same names (`--L-max` ↔ `L-max`).
//! Resolution order is flag, then file, then built-in default; the fully
//! resolved settings are what the manifest records.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use fracising::quadratic::critical_field;
use fracising::FractionalOrder;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Quadratic,
    Ed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Open,
    Antiperiodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    Gap,
    Drift,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Subcommand a manifest was written for.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// Code version a manifest was written by (informational).
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,

    /// Fractional order q > 0
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Overall coupling J0
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j0: Option<f64>,
    /// Kac-normalise the kernel
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kac: Option<bool>,
    /// Largest coupling distance
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<usize>,
    /// Sup-norm tolerance of the exponential fit
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long = "max-terms")]
    #[serde(rename = "max-terms", skip_serializing_if = "Option::is_none")]
    pub max_terms: Option<usize>,
    /// Chain length
    #[arg(long = "L")]
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    /// Chain lengths, comma separated
    #[arg(long = "L-list", value_delimiter = ',')]
    #[serde(rename = "L-list", skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<usize>>,
    /// Largest chain length for size sweeps
    #[arg(long = "L-max")]
    #[serde(rename = "L-max", skip_serializing_if = "Option::is_none")]
    pub length_max: Option<usize>,
    /// Transverse field (default: the mean-field critical field)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Transverse fields, comma separated
    #[arg(long = "g-grid", value_delimiter = ',')]
    #[serde(rename = "g-grid", skip_serializing_if = "Option::is_none")]
    pub g_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryKind>,
    /// Symmetry-breaking field on site 0 for ED entropies
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pin: Option<f64>,
    /// Drive amplitude
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    /// Drive window length
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long = "t-max")]
    #[serde(rename = "t-max", skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Driven site
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    /// Absolute entropy contour levels (default: fractions of the peak increment)
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// CSV input for scaling-fit
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<FitKind>,
    /// Output directory
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! layer {
    ($top:expr, $bottom:expr; $($field:ident),*) => {
        Settings { $($field: $top.$field.clone().or_else(|| $bottom.$field.clone()),)* }
    };
}

impl Settings {
    /// `self` wins over `under` field by field.
    pub fn over(&self, under: &Settings) -> Settings {
        layer!(self, under; command, version, q, j0, kac, range, tol, max_terms, length, lengths, length_max, g,
            g_grid, method, boundary, pin, lambda0, tau, dt, t_max, site, levels, input, model, out, format)
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialise")
    }

    pub fn order(&self) -> Result<FractionalOrder, CliError> {
        let q = self.q.ok_or_else(|| CliError::Usage("--q is required".into()))?;
        Ok(FractionalOrder::new(q)?)
    }

    pub fn critical_field(&self) -> Result<f64, CliError> {
        Ok(critical_field(self.order()?, self.j0.unwrap_or(1.0)))
    }
}

/// Built-in defaults for `command`; `g` and the drive follow from q.
pub fn defaults(command: &str, partial: &Settings) -> Result<Settings, CliError> {
    let mut d = Settings {
        j0: Some(1.0),
        kac: Some(false),
        tol: Some(1e-9),
        max_terms: Some(20),
        out: Some(PathBuf::from("fracising-out")),
        format: Some(Format::Csv),
        ..Settings::default()
    };
    d.range = Some(match command {
        "kernel" => 20,
        "mpo-check" => 200,
        _ => 1000,
    });
    let needs_q = command != "scaling-fit";
    if needs_q {
        let gc = partial.critical_field()?;
        d.g = Some(gc);
    }
    match command {
        "mpo-check" => d.length = Some(10),
        "gap-scan" => {
            d.length_max = Some(200);
            d.method = Some(Method::Quadratic);
            d.boundary = Some(BoundaryKind::Open);
            d.pin = Some(fracising::ed::DEFAULT_PIN);
        }
        "lightcone" | "pipeline" => {
            let gc = partial.critical_field()?;
            let length = partial.length.or(partial.length_max).unwrap_or(200);
            let tau = 5.0 / gc;
            d.length = Some(length);
            d.length_max = Some(200);
            d.lambda0 = Some(0.1 * gc);
            d.tau = Some(tau);
            d.dt = Some(tau / 500.0);
            d.t_max = Some(0.225 * length as f64);
            d.site = Some(length / 2);
            d.boundary = Some(BoundaryKind::Open);
        }
        "scaling-fit" => d.model = Some(FitKind::Gap),
        _ => {}
    }
    if command == "pipeline" {
        // the pipeline's light cone runs at L-max
        let length = partial.length_max.unwrap_or(200);
        d.length = Some(length);
        d.t_max = Some(0.225 * length as f64);
        d.site = Some(length / 2);
    }
    Ok(d)
}

/// Flag > file > default.
pub fn resolve(command: &str, flags: &Settings, file: Option<&Settings>) -> Result<Settings, CliError> {
    let empty = Settings::default();
    let file = file.unwrap_or(&empty);
    if let Some(c) = &file.command {
        if c != command {
            return Err(CliError::Usage(format!("config was written for `{c}`, not `{command}`")));
        }
    }
    let partial = flags.over(file);
    let mut resolved = partial.over(&defaults(command, &partial)?);
    resolved.command = Some(command.to_string());
    resolved.version = Some(env!("CARGO_PKG_VERSION").to_string());
    Ok(resolved)
}
