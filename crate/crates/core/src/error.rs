use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edges reference unknown node ids: {}", .0.join(", "))]
    DanglingEndpoints(Vec<String>),
    #[error("meta-path `{path}`: {reason}")]
    Schema { path: String, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value in {context}{}", pair_suffix(.pair))]
    NonFinite {
        context: &'static str,
        pair: Option<usize>,
    },
    #[error("pair ({0}, {1}) is not in the count table")]
    UnknownPair(String, String),
    #[error("meta-path {0} has no cycle counts")]
    MissingCycles(usize),
    #[error("metric undefined: {0}")]
    Metric(String),
    #[error("outer iteration {iteration}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } => true,
            Error::AtIteration { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

fn pair_suffix(pair: &Option<usize>) -> String {
    match pair {
        Some(s) => alloc::format!(" at pair index {s}"),
        None => String::new(),
    }
}
