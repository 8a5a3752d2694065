//! CLI failure taxonomy with one stable exit code per class.

use thiserror::Error;

/// Exit codes of the `dynkin` binary.
pub mod exit {
    /// Everything succeeded.
    pub const OK: i32 = 0;
    /// I/O failure (missing files, unwritable output).
    pub const IO: i32 = 1;
    /// Malformed or invalid input (parse errors, spec violations, bad flags).
    pub const VALIDATION: i32 = 2;
    /// The solver's outer iteration failed to stabilize.
    pub const OVERFLOW: i32 = 3;
    /// An equilibrium check failed (including malformed strategy pairs).
    pub const VERIFICATION: i32 = 4;
    /// Solver and oracle disagree beyond the accepted gap.
    pub const ORACLE_GAP: i32 = 5;
    /// Simulation estimate inconsistent with the exact value.
    pub const SIMULATION: i32 = 6;
}

// ── Errors ──────────────────────────────────────────────────────────────

/// Any failure a subcommand can report, tagged by exit class.
#[derive(Debug, Error)]
pub enum CliError {
    /// File system trouble.
    #[error("{0}")]
    Io(String),
    /// Bad input: unparsable files, invalid specs, inconsistent flags.
    #[error("{0}")]
    Invalid(String),
    /// Iteration overflow inside the solver.
    #[error("{0}")]
    Overflow(String),
    /// Verification failed.
    #[error("{0}")]
    Verification(String),
    /// Oracle disagreement.
    #[error("{0}")]
    OracleGap(String),
    /// Simulation discrepancy.
    #[error("{0}")]
    Simulation(String),
}

impl CliError {
    /// The process exit code for this failure class.
    pub fn code(&self) -> i32 {
        match self {
            CliError::Io(_) => exit::IO,
            CliError::Invalid(_) => exit::VALIDATION,
            CliError::Overflow(_) => exit::OVERFLOW,
            CliError::Verification(_) => exit::VERIFICATION,
            CliError::OracleGap(_) => exit::ORACLE_GAP,
            CliError::Simulation(_) => exit::SIMULATION,
        }
    }

    /// Wrap an I/O error with the path it concerned.
    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }

    /// Wrap a parse error with the file it concerned (serde reports
    /// line/column positions itself).
    pub fn parse(context: &str, err: serde_json::Error) -> Self {
        CliError::Invalid(format!("{context}: {err}"))
    }
}

/// Classify a solver error: overflow keeps its dedicated exit code,
/// everything else is an input problem.
pub fn from_game_error<S: dynkin::Scalar>(err: dynkin::GameError<S>) -> CliError {
    match err {
        dynkin::GameError::IterationOverflow { .. } => CliError::Overflow(err.to_string()),
        other => CliError::Invalid(other.to_string()),
    }
}
