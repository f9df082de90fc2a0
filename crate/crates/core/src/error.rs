use std::fmt;

use crate::costs::CostId;
use crate::selection::FeasibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A context input that a partial cost needed but did not find.
#[derive(Debug, Clone, PartialEq)]
pub struct Requirement {
    pub partial: CostId,
    pub needs: &'static str,
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} needs {}", self.partial, self.needs)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown partial cost: {0}")]
    UnknownPartial(String),
    #[error("missing context: {}", join(.0))]
    MissingContext(Vec<Requirement>),
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error("invalid fuel model: {0}")]
    InvalidModel(String),
    #[error("trajectories share no arc-length interval")]
    NoOverlap,
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("parse error at position {position}: {reason}")]
    Parse { position: usize, reason: String },
    #[error("unknown named cost function: {0}")]
    Lookup(String),
    #[error("term {index} ({id}): {source}")]
    Term {
        index: usize,
        id: CostId,
        #[source]
        source: Box<Error>,
    },
    #[error("no feasible candidate among {}", .0.len())]
    NoFeasibleCandidate(Vec<FeasibilityReport>),
}

impl Error {
    pub(crate) fn missing(partial: CostId, needs: &'static str) -> Self {
        Error::MissingContext(vec![Requirement { partial, needs }])
    }

    /// Strips `Term` wrappers down to the underlying cause.
    pub fn root(&self) -> &Error {
        match self {
            Error::Term { source, .. } => source.root(),
            other => other,
        }
    }
}

fn join(reqs: &[Requirement]) -> String {
    reqs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
