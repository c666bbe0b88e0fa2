use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{kind} index {index} out of range (count {count})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        count: usize,
    },

    #[error("invalid frequency: {0}")]
    InvalidFrequency(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("matrix is not positive definite at pivot {pivot}")]
    NotPositiveDefinite { pivot: usize },

    #[error("invalid Schur partition: {0}")]
    InvalidPartition(String),

    #[error("perturbation touches index {index} outside its declared subset")]
    ClosureViolation { index: usize },

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid fit: {0}")]
    InvalidFit(String),

    #[error("dense dimension {dim} exceeds the oracle cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("factorization failed at frequency node {node}: {source}")]
    AtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn at_node(self, node: usize) -> Self {
        Error::AtNode {
            node,
            source: Box::new(self),
        }
    }
}
