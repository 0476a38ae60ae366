use std::fmt;

/// A failed run and its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Inconsistent arguments (exit 1).
    Usage(String),
    /// Parse or domain problems (exit 2).
    Input(String),
    /// A gated check exceeded its tolerance (exit 3).
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::Tolerance(m) => write!(f, "tolerance failure: {m}"),
        }
    }
}

impl From<gtd_core::Error> for CliError {
    fn from(e: gtd_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches the evaluation point to a core error.
pub fn at_point<T>(r: gtd_core::Result<T>, names: &[String], point: &[f64]) -> CliResult<T> {
    r.map_err(|e| {
        let msg = e.to_string();
        let where_ = format_point(names, point);
        if msg.contains(&where_) {
            CliError::Input(msg)
        } else {
            CliError::Input(format!("{msg} at {where_}"))
        }
    })
}

pub fn format_point(names: &[String], point: &[f64]) -> String {
    names
        .iter()
        .zip(point)
        .map(|(n, x)| format!("{n}={x}"))
        .collect::<Vec<_>>()
        .join(",")
}
