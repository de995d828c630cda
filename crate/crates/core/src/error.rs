use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u8, alphabet: usize },

    #[error("admissibility violation at position {position}: transition {from} -> {to} is forbidden")]
    Inadmissible { position: usize, from: u8, to: u8 },

    #[error("transition matrix is not irreducible: symbol {from} cannot reach symbol {to}")]
    NotIrreducible { from: u8, to: u8 },

    #[error("need {needed} symbols but only {available} are materialized")]
    DemandMoreSymbols { needed: u64, available: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: String, detail: String },

    #[error("tolerance infeasible: residual {residual:.3e} exceeds {tolerance:.3e} (dominating term: {dominating})")]
    ToleranceInfeasible {
        residual: f64,
        tolerance: f64,
        dominating: String,
    },

    #[error("schedule overflows 2^63 at depth {depth}; maximal feasible depth is {max_feasible}")]
    ScheduleOverflow { depth: usize, max_feasible: usize },

    #[error("orbit length {length} exceeds cap {cap}; largest depth that fits is {max_depth}")]
    ResourceCap {
        length: u64,
        cap: u64,
        max_depth: usize,
    },

    #[error("degenerate irregularity witness: {0}")]
    DegenerateWitness(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invariant(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Invariant {
            name: name.into(),
            detail: detail.into(),
        }
    }
}
