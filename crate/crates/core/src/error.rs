use thiserror::Error;

/// Errors raised across the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point ({x}, {y}) lies outside the subgraph chart")]
    ChartMiss { x: f64, y: f64 },

    #[error("non-integrable singularity: exponent {exponent} in the height variable")]
    NonIntegrable { exponent: f64 },

    #[error("quadrature failed to stabilise: {0}")]
    NoStabilization(String),

    #[error("bisection does not bracket a root: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("mesh too fine for the memory budget: {vertices} vertices (limit {limit})")]
    MeshBudget { vertices: usize, limit: usize },

    #[error("wavelength not resolved: mesh_h = {mesh_h}, need at most {required}")]
    Resolution { mesh_h: f64, required: f64 },

    #[error("support of W too close to the boundary for level {m_level}")]
    SupportTooClose { m_level: u32 },

    #[error("greedy cover did not terminate within {0} iterations")]
    NonTermination(usize),

    #[error("certificate void: form at cell {k} is nonnegative ({value})")]
    CertificateVoid { k: usize, value: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
