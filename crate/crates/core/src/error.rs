use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input text; `line` is 1-based.
    Parse {
        line: usize,
        message: String,
    },
    SelfLoop {
        node: String,
    },
    DuplicateEdge {
        a: String,
        b: String,
    },
    NonPositiveWeight {
        line: usize,
    },
    Disconnected,
    InvalidArgument(String),
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    SizeLimit {
        requested: usize,
        limit: usize,
    },
    InsufficientSamples {
        order: usize,
        needed: usize,
        found: usize,
    },
    NegativeRate {
        index: usize,
    },
    ZeroColumnSum {
        column: usize,
    },
    /// `(B λ)_i` vanished while the matched target `η_i` is positive.
    Divergence {
        row: usize,
    },
    SolveFailed,
    RankDeficient {
        rank: usize,
        columns: usize,
    },
    ZeroDenominator {
        component: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            Error::DuplicateEdge { a, b } => write!(f, "duplicate edge {a}-{b}"),
            Error::NonPositiveWeight { line } => write!(f, "line {line}: weight must be positive"),
            Error::Disconnected => f.write_str("topology is not connected"),
            Error::InvalidArgument(msg) => f.write_str(msg),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::SizeLimit { requested, limit } => {
                write!(f, "size {requested} exceeds limit {limit}")
            }
            Error::InsufficientSamples {
                order,
                needed,
                found,
            } => write!(
                f,
                "order-{order} statistic needs at least {needed} samples, got {found}"
            ),
            Error::NegativeRate { index } => write!(f, "rate {index} is negative"),
            Error::ZeroColumnSum { column } => write!(f, "column {column} has zero sum"),
            Error::Divergence { row } => {
                write!(
                    f,
                    "iteration diverged: zero prediction for positive target row {row}"
                )
            }
            Error::SolveFailed => f.write_str("normal equations are not positive definite"),
            Error::RankDeficient { rank, columns } => {
                write!(f, "matrix has rank {rank} < {columns} columns")
            }
            Error::ZeroDenominator { component } => {
                write!(f, "component {component} has zero mean-square true rate")
            }
        }
    }
}

impl core::error::Error for Error {}
