use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("matrix is not skew-symmetric: max |a_ij + a_ji| = {0:e}")]
    NotSkew(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid mismatch: {0}")]
    Grid(String),
    #[error("degree error: {0}")]
    Degree(String),
    #[error("fiber truncation: edge magnitude {magnitude:e} exceeds decay tolerance {tol:e}")]
    Truncation { magnitude: f64, tol: f64 },
    #[error("frame error: {0}")]
    Frame(String),
    #[error("section is not unit length: max deviation {0:e}")]
    Norm(f64),
    #[error("zero locus error: {0}")]
    Locus(String),
    #[error("bilinear form has nontrivial kernel: max rank {rank} < {n}")]
    Kernel { rank: usize, n: usize },
    #[error("B(y) family fails to commute: residual {0:e}")]
    Commutation(f64),
    #[error("unknown fixture: {0}")]
    Fixture(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
