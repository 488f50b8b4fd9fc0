use thiserror::Error;

pub type Result<T> = std::result::Result<T, FrolovError>;

#[derive(Debug, Error)]
pub enum FrolovError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    /// Root isolation did not produce the expected roots. This points at a
    /// precision problem, not at bad user input.
    #[error("root certification failed: {0}")]
    Certification(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "enumeration budget exceeded for n = {n}, d = {d}: estimated {estimate:.3e} candidates > budget {budget:.3e}"
    )]
    BudgetExceeded { n: f64, d: usize, estimate: f64, budget: f64 },

    #[error("search radius {radius} contains no nonzero dual lattice point")]
    RadiusTooSmall { radius: f64 },

    #[error("arity mismatch: function has arity {function}, lattice has dimension {lattice}")]
    ArityMismatch { function: usize, lattice: usize },

    #[error("unsupported smoothness class {class}: {reason}; nearest covered regime: {nearest}")]
    UnsupportedClass { class: String, reason: String, nearest: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl FrolovError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            FrolovError::BudgetExceeded { .. } | FrolovError::Certification(_) => 2,
            _ => 1,
        }
    }
}
