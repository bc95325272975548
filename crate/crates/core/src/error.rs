use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument is outside its documented domain.
    #[error("invalid {what}: {reason}")]
    Domain { what: &'static str, reason: String },

    /// The DFT of a block row left an imaginary part larger than rounding allows,
    /// meaning the input was not an even (symmetric circulant) sequence.
    #[error("spectral blocks not real: imaginary residue {residue:.3e} exceeds {limit:.3e}")]
    RealnessViolation { residue: f64, limit: f64 },

    #[error("spectral block {block} has eigenvalue {eigenvalue:.3e}, below -{threshold:.3e}")]
    IndefiniteBlocks {
        block: usize,
        eigenvalue: f64,
        threshold: f64,
    },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("dense {what} of dimension {dim} exceeds the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        dim: usize,
        cap: usize,
    },

    #[error("calibration has no root for parameter in [{lo:e}, {hi:e}]")]
    Bracketing { lo: f64, hi: f64 },

    #[error("square roots of the spectral blocks have not been computed")]
    MissingSqrt,

    #[error("malformed field data at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            what,
            reason: reason.into(),
        }
    }

    /// True for errors caused by invalid user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::Bracketing { .. })
    }
}
