use crate::network::Violation;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid network:\n{}", list(.0))]
    Invalid(Vec<Violation>),

    #[error("domain error: {0}")]
    Domain(String),

    /// Post-step bound check failed; usually a CFL violation.
    #[error("density out of bounds at t={time}: road {road}, cell {cell}, rho={value}")]
    OutOfBounds {
        time: f64,
        road: u32,
        cell: usize,
        value: f64,
    },

    #[error("{0}: {1}")]
    Parse(String, String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Error {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Config(format!("csv: {other:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

fn list(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}
