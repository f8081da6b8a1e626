use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} of size {size} exceeds the guard of {limit}")]
    SizeGuard { what: &'static str, size: usize, limit: usize },
    #[error("{0}")]
    EmptyModel(&'static str),
    #[error("event list is not ∩-stable: events {0} and {1} intersect outside the list")]
    NotCapStable(usize, usize),
    #[error("parameter labels are not {0}-tuples; sections need tuple labels")]
    NotTupleParams(usize),
    #[error("bad submodel: {0}")]
    BadSubmodel(String),
    #[error("malformed exhaustion `{label}`: {reason}")]
    Exhaustion { label: String, reason: String },
    #[error("partition is not sufficient for the submodel; Rao-Blackwellization is undefined")]
    NotSufficient,
    #[error("format error: {0}")]
    Format(String),
    #[error("unknown registry entry `{0}`")]
    UnknownEntry(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
