use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("multigraph has {edges} edges, above the limit of {limit}")]
    TooManyEdges { edges: u32, limit: u32 },
    #[error("catalog d_max = {d_max} exceeds the limit of {limit}")]
    CatalogLimit { d_max: u32, limit: u32 },
    #[error("vertex {vertex} out of range for {n_vertices} vertices")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },
    #[error("malformed edge token `{0}` (expected `i-j` or `i-j*m`)")]
    BadEdgeToken(String),
    #[error("catalog line {line}: {message}")]
    CatalogParse { line: usize, message: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("size limit: {0}")]
    SizeLimit(String),
    #[error("identity check failed: {0}")]
    Identity(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
