use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("target coincides with array element {element} (distance {distance:e} m)")]
    DegenerateGeometry { element: usize, distance: f64 },

    #[error("Fisher information is not positive semidefinite (J_rr={j_rr:e}, J_tt={j_tt:e}, det={det:e})")]
    NotPositiveSemidefinite { j_rr: f64, j_tt: f64, det: f64 },

    #[error("empty search region: {0}")]
    EmptySearchRegion(String),

    #[error("observation contains non-finite sample at flat index {0}")]
    NonFiniteSample(usize),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
