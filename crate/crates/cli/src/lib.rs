//! Command-line front end: argument model, space configs and the commands.
//!
//! Every command renders its whole result into memory first and the binary
//! writes it in one go, so output is independent of thread scheduling.

pub mod commands;
pub mod config;
pub mod format;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sigma_geometry::Error;
use thiserror::Error as ThisError;

pub use commands::{execute, CommandOutput};
pub use config::{load_table, parse_table, render_table, save_table, SpaceConfig};

pub const EXIT_OK: i32 = 0;
/// Unreadable or malformed configuration, table or flag.
pub const EXIT_CONFIG: i32 = 2;
/// A point or query outside what the space can answer.
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_DEGENERATE_BASIS: i32 = 4;
pub const EXIT_DIMENSION_CAP: i32 = 5;
pub const EXIT_NON_CONVERGENCE: i32 = 6;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Core(e) => match e {
                Error::InvalidSpec(_) | Error::InvalidTable(_) => EXIT_CONFIG,
                Error::Expr(sigma_geometry::expr::ExprError::Eval { .. }) => EXIT_DOMAIN,
                Error::Expr(_) => EXIT_CONFIG,
                Error::DegenerateBasis { .. } => EXIT_DEGENERATE_BASIS,
                Error::DimensionExceedsCap { .. } => EXIT_DIMENSION_CAP,
                Error::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
                _ => EXIT_DOMAIN,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sigma-geometry", version, about = "Geometry from the world function σ = ½ρ²")]
pub struct Cli {
    /// Space configuration (JSON).
    #[arg(long, global = true, value_name = "JSON")]
    pub space: Option<PathBuf>,
    /// Membership and classification tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed for every random sample.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write data here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// σ, ρ and interval kind for one pair of points.
    Eval {
        /// Coordinates "a,b,…" or a label of a finite space.
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        q: String,
    },
    /// Grid sample of a tube T(P0..Pn).
    Tube(TubeArgs),
    /// Smallest n with every sample inside T(P^n).
    Dim(DimArgs),
    /// Euclidean conditions I–III on a detected basis.
    Euclid(EuclidArgs),
    /// Discrete geodesic between two points.
    Geodesic(GeodesicArgs),
    /// Collinearity cone at x of a direction u at x′.
    Cone(ConeArgs),
    /// Residuals of the world-function identities at one pair.
    Identities(IdentityArgs),
}

#[derive(Debug, Args)]
pub struct TubeArgs {
    /// Basis points "a,b;c,d;…".
    #[arg(long, allow_hyphen_values = true)]
    pub basis: String,
    /// Lower window corner (not used with --broken).
    #[arg(long, allow_hyphen_values = true, required_unless_present = "broken")]
    pub lo: Option<String>,
    /// Upper window corner.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "broken")]
    pub hi: Option<String>,
    /// Grid points per axis, one value or one per axis; with --broken a
    /// single value applied to every segment box.
    #[arg(long, default_value = "41")]
    pub resolution: String,
    /// Accept a null basis (F_n = 0 with a nonzero Γ matrix).
    #[arg(long)]
    pub allow_null: bool,
    /// Treat the basis as the vertices of a broken line and sample the union
    /// of segment tubes, each over its own bounding box.
    #[arg(long)]
    pub broken: bool,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 15)]
    pub max_dim: usize,
}

#[derive(Debug, Args)]
pub struct EuclidArgs {
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Sample pairs for condition II (all pairs for finite spaces).
    #[arg(long, default_value_t = 500)]
    pub pairs: usize,
    /// Coordinate grid points per axis for condition III.
    #[arg(long, default_value_t = 5)]
    pub grid: usize,
    /// Dimension cap; defaults to the coordinate dimension of the space.
    #[arg(long)]
    pub max_dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Polyline segments.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub gtol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Report the plain discrete length instead of the extrapolated one.
    #[arg(long)]
    pub no_extrapolate: bool,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ConeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, allow_hyphen_values = true)]
    pub x2: String,
    /// Direction at x2.
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
    /// Directions in the search net.
    #[arg(long, default_value_t = 10_000)]
    pub resolution: usize,
    /// Acceptance threshold on the normalised cone residual.
    #[arg(long, default_value_t = 1e-6)]
    pub cone_tol: f64,
    /// Angular radius around ±u for the degeneracy verdict.
    #[arg(long, default_value_t = 1e-2)]
    pub cluster_radius: f64,
    /// One finite-difference step for every derivative order.
    #[arg(long)]
    pub fd_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, allow_hyphen_values = true)]
    pub x2: String,
    #[arg(long)]
    pub fd_step: Option<f64>,
}
