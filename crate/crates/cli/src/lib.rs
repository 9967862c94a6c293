//! Command-line front end: layout linter, junction repair and profile export.
//!
//! Exit codes: 0 success, 1 a discontinuous junction or a failed repair,
//! 2 unreadable input or bad arguments.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod layout;

pub use layout::{parse_layout, serialize_layout, Layout, LayoutDocument, LayoutError};

/// Overrides the derivative tolerance of `check` when no flag is given.
pub const TOLERANCE_ENV: &str = "AGV_PATH_KIT_TOL";

#[derive(Debug, Parser)]
#[command(name = "agv-path-kit", version, about = "Continuity linter, junction repair and speed profiles for AGV path layouts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every junction of a layout.
    Check(CheckArgs),
    /// Repair discontinuous junctions and write the updated layout.
    Repair(RepairArgs),
    /// Plan a speed profile and export it with wheel-level tracks as CSV.
    Profile(ProfileArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    pub layout: PathBuf,
    /// Junction position tolerance, meters.
    #[arg(long)]
    pub tol_position: Option<f64>,
    /// Orientation tolerance, radians.
    #[arg(long)]
    pub tol_angle: Option<f64>,
    /// Relative tolerance of the derivative conditions.
    #[arg(long)]
    pub tol_derivative: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Accept junctions that are only smooth when the vehicle stops there.
    #[arg(long)]
    pub allow_rest: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Time,
    Displacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
    Both,
}

#[derive(Debug, clap::Args)]
pub struct RepairArgs {
    pub layout: PathBuf,
    /// Junction to repair, `left->right`; default: every junction that is
    /// not smooth.
    #[arg(long)]
    pub junction: Option<String>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Time)]
    pub objective: ObjectiveArg,
    /// Segment whose control points may move (tangential and crab pairs).
    #[arg(long, value_enum, default_value_t = SideArg::Right)]
    pub side: SideArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ProfileArgs {
    pub layout: PathBuf,
    /// Samples per segment.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Acceleration bound, m/s².
    #[arg(long, default_value_t = 0.5)]
    pub a_max: f64,
    /// Plan across discontinuous junctions instead of refusing.
    #[arg(long)]
    pub diagnostic: bool,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Errors mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{file}: {source}")]
    Layout { file: String, source: LayoutError },
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

/// Runs the tool with explicit streams; returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Check(a) => commands::check(a, out),
        Command::Repair(a) => commands::repair(a, out, err),
        Command::Profile(a) => commands::profile(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run_with(args, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}
