use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("empty domain: {0}")]
    EmptyDomain(&'static str),
    #[error("allele counts violate sum j*a_j = n: weighted sum {weighted_sum}, n = {n}")]
    Constraint { n: usize, weighted_sum: u128 },
    #[error("resource bound exceeded: {what} needs {required}, limit {limit}")]
    ResourceBound {
        what: &'static str,
        required: u128,
        limit: u128,
    },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid tree address {path:?} for branching k = {k}")]
    InvalidAddress { path: Vec<usize>, k: usize },
    #[error("vertex {0:?} is already present")]
    DuplicateVertex(Vec<usize>),
    #[error("vertex {0:?} has no neighbour in the region")]
    DetachedVertex(Vec<usize>),
    #[error("vertex {0:?} carries no spin")]
    MissingSpin(Vec<usize>),
    #[error("no field entry for spin {spin} at vertex {vertex:?}")]
    MissingField { spin: u32, vertex: Vec<usize> },
    #[error("no tail mass for vertex {0:?}")]
    MissingTailMass(Vec<usize>),
    #[error("structural error: {0}")]
    Structural(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
