//! Command-line flags, the optional TOML config file, and the resolved run
//! configuration echoed into every output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use orlat_core::PhiVariant;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "orlat", version, about = "Green functions and Martin kernels of the walk on the sign-oriented lattice")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Seed for Monte Carlo streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Step horizon of exact evolutions and simulated paths.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    /// Number of Monte Carlo paths.
    #[arg(long, global = true)]
    pub paths: Option<u64>,
    /// Absolute tolerance of Fourier quadratures.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Closed form of the induced-step characteristic function.
    #[arg(long, global = true, value_enum)]
    pub variant: Option<VariantChoice>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// TOML file with any of the keys seed, horizon, paths, tol, variant,
    /// out, format.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate both closed forms of φ against the exact first-hit enclosure.
    Phi {
        /// Number of grid intervals on [0, π].
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Explicit t values (overrides --grid).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t: Vec<f64>,
    },
    /// Green function values from one start to a set of targets.
    Green {
        /// Start vertex `x1,x2`.
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        x: String,
        #[command(flatten)]
        targets: TargetArgs,
        #[arg(long, value_enum, default_value_t = RouteChoice::Spectral)]
        route: RouteChoice,
    },
    /// Martin kernels from a box of starts along a directional sequence.
    Martin {
        /// Starts `[lo, hi]²`, given as `lo:hi`.
        #[arg(long, default_value = "-3:3", allow_hyphen_values = true)]
        xbox: String,
        #[command(flatten)]
        seq: SeqArgs,
        /// Use exact first-hit ingredients up to --horizon instead of the
        /// closed form.
        #[arg(long)]
        oracle: bool,
    },
    /// Run the invariant suites and write a JSON report.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Add a constant to φ inside the spectral checks.
        #[arg(long, hide = true, allow_hyphen_values = true)]
        inject_phi_shift: Option<f64>,
    },
    /// Law of the walk after --horizon steps.
    Evolve {
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        x: String,
        #[arg(long, value_enum, default_value_t = ModeChoice::Float)]
        mode: ModeChoice,
    },
    /// Law of the first axis hit from a start, truncated at --horizon.
    FirstHit {
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        x: String,
        #[arg(long, value_enum, default_value_t = ModeChoice::Float)]
        mode: ModeChoice,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct TargetArgs {
    /// Single target `y1,y2`.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["rect", "seq"])]
    pub y: Option<String>,
    /// Rectangle `a:b,c:d` of targets, `a ≤ y1 ≤ b`, `c ≤ y2 ≤ d`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "seq")]
    pub rect: Option<String>,
    #[command(flatten)]
    pub seq: OptSeqArgs,
}

/// A directional sequence: `lambda=<λ>`, `+inf`, `-inf`, `+cubic`, `-cubic`.
#[derive(Debug, Clone, Args)]
pub struct SeqArgs {
    /// Directional sequence: `lambda=v`, `+inf`, `-inf`, `+cubic` or `-cubic`.
    #[arg(long, default_value = "lambda=0", allow_hyphen_values = true)]
    pub seq: String,
    /// Indices: a list `32,64,128` or `lo:hi:n` for `n` geometric points.
    #[arg(long, default_value = "32,64,128,256")]
    pub ks: String,
    /// Row of horizontal sequences.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub height: i64,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OptSeqArgs {
    /// Directional sequence: `lambda=v`, `+inf`, `-inf`, `+cubic` or `-cubic`.
    #[arg(long, allow_hyphen_values = true)]
    pub seq: Option<String>,
    /// Indices of the sequence, as for `martin` (default `32,64,128,256`).
    #[arg(long)]
    pub ks: Option<String>,
    /// Row of horizontal sequences (default 1).
    #[arg(long, allow_hyphen_values = true)]
    pub height: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantChoice {
    Paper,
    Excursion,
    /// The variant selected by the exact first-hit arbitration.
    Auto,
}

impl VariantChoice {
    pub fn resolve(self) -> PhiVariant {
        match self {
            VariantChoice::Paper => PhiVariant::Paper,
            VariantChoice::Excursion => PhiVariant::Excursion,
            VariantChoice::Auto => PhiVariant::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteChoice {
    Spectral,
    Oracle,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernel,
    Oracle,
    Spectral,
    Mc,
    Martin,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    Exact,
    Float,
}

/// Keys accepted in the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
    pub paths: Option<u64>,
    pub tol: Option<f64>,
    pub variant: Option<VariantChoice>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            source: Box::new(e),
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            source: Box::new(e),
        })
    }
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PATHS: u64 = 100_000;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default horizon per command.
pub fn default_horizon(command: &Command) -> usize {
    match command {
        Command::Phi { .. } => 1 << 14,
        Command::Evolve { .. } => 20,
        _ => 4096,
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub horizon: usize,
    pub n_paths: u64,
    pub abs_tol: f64,
    pub variant_requested: VariantChoice,
    pub variant: PhiVariant,
    pub output_path: Option<String>,
    pub format: Format,
    /// Command-specific options as given.
    pub options: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn resolve(common: &CommonArgs, command: &Command) -> Result<Self> {
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let variant_requested = common.variant.or(file.variant).unwrap_or(VariantChoice::Auto);
        let format = common.format.or(file.format).unwrap_or(match command {
            Command::Verify { .. } => Format::Json,
            _ => Format::Csv,
        });
        let abs_tol = common.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
        if !(abs_tol > 0.0) {
            return Err(CliError::Usage(format!("--tol must be positive, got {abs_tol}")));
        }
        let n_paths = common.paths.or(file.paths).unwrap_or(DEFAULT_PATHS);
        if n_paths == 0 {
            return Err(CliError::Usage("--paths must be positive".into()));
        }
        Ok(RunConfig {
            command: command_name(command).to_string(),
            seed: common.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            horizon: common.horizon.or(file.horizon).unwrap_or_else(|| default_horizon(command)),
            n_paths,
            abs_tol,
            variant_requested,
            variant: variant_requested.resolve(),
            output_path: common
                .out
                .clone()
                .or(file.out)
                .map(|p| p.to_string_lossy().into_owned()),
            format,
            options: command_options(command),
        })
    }

    /// `key = value` lines for output headers.
    pub fn header_lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("orlat {VERSION}"),
            format!("command = {}", self.command),
            format!("seed = {}", self.seed),
            format!("horizon = {}", self.horizon),
            format!("paths = {}", self.n_paths),
            format!("tol = {:e}", self.abs_tol),
            format!(
                "variant = {} (requested {})",
                self.variant.name(),
                variant_choice_name(self.variant_requested)
            ),
            format!("format = {}", format_name(self.format)),
            format!("out = {}", self.output_path.as_deref().unwrap_or("-")),
        ];
        for (k, v) in &self.options {
            out.push(format!("{k} = {v}"));
        }
        out
    }
}

fn variant_choice_name(v: VariantChoice) -> &'static str {
    match v {
        VariantChoice::Paper => "paper",
        VariantChoice::Excursion => "excursion",
        VariantChoice::Auto => "auto",
    }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Phi { .. } => "phi",
        Command::Green { .. } => "green",
        Command::Martin { .. } => "martin",
        Command::Verify { .. } => "verify",
        Command::Evolve { .. } => "evolve",
        Command::FirstHit { .. } => "first-hit",
    }
}

fn command_options(c: &Command) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    match c {
        Command::Phi { grid, t } => {
            if t.is_empty() {
                put("grid", grid.to_string());
            } else {
                put("t", t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            }
        }
        Command::Green { x, targets, route } => {
            put("x", x.clone());
            if let Some(y) = &targets.y {
                put("y", y.clone());
            }
            if let Some(r) = &targets.rect {
                put("rect", r.clone());
            }
            if let Some(s) = &targets.seq.seq {
                put("seq", s.clone());
            }
            if let Some(s) = &targets.seq.ks {
                put("ks", s.clone());
            }
            if let Some(h) = targets.seq.height {
                put("height", h.to_string());
            }
            put("route", format!("{route:?}").to_lowercase());
        }
        Command::Martin { xbox, seq, oracle } => {
            put("xbox", xbox.clone());
            put("seq", seq.seq.clone());
            put("ks", seq.ks.clone());
            put("height", seq.height.to_string());
            put("ingredients", if *oracle { "oracle" } else { "closed-form" }.into());
        }
        Command::Verify { suite, inject_phi_shift } => {
            put("suite", format!("{suite:?}").to_lowercase());
            if let Some(s) = inject_phi_shift {
                put("inject_phi_shift", format!("{s:e}"));
            }
        }
        Command::Evolve { x, mode } | Command::FirstHit { x, mode } => {
            put("x", x.clone());
            put("mode", format!("{mode:?}").to_lowercase());
        }
    }
    m
}
