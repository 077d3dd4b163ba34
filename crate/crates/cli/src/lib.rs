//! Command-line front end: subcommands for each pipeline stage, sweeps,
//! thresholds and the full reproduction battery.

pub mod battery;
pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, CampaignConfig, Problem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nls-spectral", version, about = "Spectral verification for NLS ground states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem family.
    #[arg(long, global = true, value_enum)]
    pub problem: Option<Problem>,
    /// Power exponent (nls1d, nls3d).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Quintic coefficient (cqnls).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Campaign configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Strength of the -delta0 exp(-|x|) perturbation.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta0: Option<f64>,
    /// Tolerance of the subcommand's own solver: soliton BVP (soliton,
    /// slope), eigen BVP, index IVP, product BVPs, or the root bracket width
    /// (threshold).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Domain length: the index integration span for `index`, the soliton
    /// domain otherwise.
    #[arg(long, global = true)]
    pub rmax: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Ground state, its frequency derivative and the potentials.
    Soliton,
    /// Slope of the squared L2 norm in omega, or its sign change over a scan.
    Slope {
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        scan: Option<Vec<f64>>,
    },
    /// Unstable eigenpair and the adjoint checks.
    Eigen,
    /// Sector indexes of the distorted operators.
    Index,
    /// Gram matrices of the projection directions.
    Products,
    /// Per-sector and global verdict.
    Verdict,
    /// Parameter at which a Gram quantity changes sign.
    Threshold {
        #[arg(long)]
        quantity: Option<String>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        bracket: Option<Vec<f64>>,
    },
    /// Full pipeline over a parameter grid.
    Sweep {
        #[arg(long, num_args = 3, value_names = ["LO", "HI", "N"], allow_negative_numbers = true)]
        grid: Option<Vec<f64>>,
    },
    /// Every acceptance criterion; exits 0 only if all pass.
    ReproducePaper,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Soliton => "soliton",
            Command::Slope { .. } => "slope",
            Command::Eigen => "eigen",
            Command::Index => "index",
            Command::Products => "products",
            Command::Verdict => "verdict",
            Command::Threshold { .. } => "threshold",
            Command::Sweep { .. } => "sweep",
            Command::ReproducePaper => "reproduce-paper",
        }
    }
}

/// Usage problem detected after argument parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Merges the config file and the flags. Flags win.
pub fn resolve_config(cli: &Cli) -> Result<CampaignConfig, UsageError> {
    let mut cfg = match &cli.common.config {
        Some(path) => parse_config(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?,
        None => CampaignConfig::default(),
    };
    let c = &cli.common;
    if let Some(p) = c.problem {
        if p != cfg.problem {
            cfg.sigma = None;
            cfg.gamma = None;
        }
        cfg.problem = p;
    }
    if let Some(s) = c.sigma {
        cfg.sigma = Some(s);
    }
    if let Some(g) = c.gamma {
        cfg.gamma = Some(g);
    }
    if let Some(d) = c.delta0 {
        cfg.delta0 = vec![d];
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    let dim3 = cfg.problem.dimension() == nls_spectral::model::Dimension::Three;
    if let Some(t) = c.tol {
        match &cli.command {
            Command::Soliton | Command::Slope { .. } => {
                if dim3 {
                    cfg.tol_soliton_3d = t
                } else {
                    cfg.tol_soliton_1d = t
                }
            }
            Command::Eigen => cfg.tol_eigen = t,
            Command::Index => cfg.tol_index = t,
            Command::Products => {
                if dim3 {
                    cfg.tol_products_3d = t
                } else {
                    cfg.tol_products_1d = t
                }
            }
            Command::Threshold { .. } => cfg.tol_threshold = t,
            other => {
                return Err(UsageError(format!(
                    "--tol has no single meaning for `{}`; set the per-stage tolerances in --config",
                    other.name()
                )))
            }
        }
    }
    if let Some(r) = c.rmax {
        match (&cli.command, dim3) {
            (Command::Index, true) => cfg.r_max_index_3d = r,
            (Command::Index, false) => cfg.r_max_index_1d = r,
            _ => cfg.r_max_soliton = r,
        }
    }
    match &cli.command {
        Command::Threshold { quantity, bracket } => {
            if let Some(q) = quantity {
                cfg.quantity = Some(q.clone());
            }
            if let Some(b) = bracket {
                cfg.bracket = Some((b[0], b[1]));
            }
        }
        Command::Sweep { grid: Some(g) } => {
            if !(g[2] >= 1.0 && g[2].fract() == 0.0) {
                return Err(UsageError(format!("--grid point count must be a positive integer, got {}", g[2])));
            }
            cfg.grid = Some(config::Grid {
                lo: g[0],
                hi: g[1],
                points: g[2] as usize,
            });
        }
        Command::Slope { scan: Some(s) } => cfg.scan = Some((s[0], s[1])),
        _ => {}
    }
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

/// Parses `argv`, runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match commands::execute(&cli.command, cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
