use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("product box ({nt}, {nx}) exceeds the configured maximum {max}")]
    BoxOverflow { nt: u32, nx: u32, max: u32 },

    #[error("argument leaves the unit ball of the nonlinearity: sup = {sup:.6} (limit {limit})")]
    Domain { sup: f64, limit: f64 },

    #[error("diffeomorphism is not a contraction: bound {bound:.3e} >= 1/2, reduce eps")]
    Contraction { bound: f64 },

    #[error("fixed point for the inverse diffeomorphism did not converge (defect {defect:.3e})")]
    FixedPoint { defect: f64 },

    #[error("{what}: iteration diverged (last ratio {ratio:.3e})")]
    Neumann { what: &'static str, ratio: f64 },

    #[error("singular system: smallest singular value {sigma_min:.3e}")]
    Singular { sigma_min: f64 },

    #[error("Diophantine condition violated at (l, j) = ({l}, {j})")]
    Diophantine { l: i32, j: i32 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Validation errors map to exit code 1, numerical failures to 2.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Json(_))
    }
}
