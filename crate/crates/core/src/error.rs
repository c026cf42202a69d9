use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("radius {0} outside the strong-convexity range (0, pi/2]")]
    NotStronglyConvex(f64),

    #[error("perimeter {perimeter} exceeds sigma_n = {sigma}; no strongly convex ball has this perimeter")]
    PerimeterTooLarge { perimeter: f64, sigma: f64 },

    #[error("body has empty interior")]
    EmptyInterior,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("no hemisphere witness: {0}")]
    NoHemisphereWitness(String),

    #[error("outside the reach guard: s = {0} must satisfy 0 <= s < pi/2")]
    OutsideReach(f64),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
