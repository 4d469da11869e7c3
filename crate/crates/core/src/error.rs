use thiserror::Error;

/// Errors raised by mesh construction, discretization, solvers and drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("inverted or degenerate element {0}")]
    InvertedElement(usize),
    #[error("degenerate rectangle")]
    DegenerateRectangle,
    #[error("facet vertex {vertex} is not on the circle (distance {distance:e})")]
    NotOnCircle { vertex: usize, distance: f64 },
    #[error("invalid geometry order {0}")]
    InvalidGeometryOrder(usize),
    #[error("unsupported space: {0}")]
    UnsupportedSpace(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown boundary label '{0}'")]
    MissingLabel(String),
    #[error("spaces are defined on different meshes")]
    MeshMismatch,
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("singular interior block on element {0}")]
    SingularInteriorBlock(usize),
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("pseudo-time iteration did not converge after {iterations} iterations (residual ratio {ratio:e})")]
    PseudoTimeNotConverged { iterations: usize, ratio: f64 },
    #[error("unstable integration: {0}")]
    Unstable(String),
    #[error("point ({0}, {1}) lies outside the flow domain")]
    OutsideDomain(f64, f64),
    #[error("velocity is not divergence-free: max |div u| / max |u| = {0:e}")]
    NotDivergenceFree(f64),
    #[error("LBB constant undefined: no unconstrained velocity dofs for k = {0}")]
    LbbUndefined(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
