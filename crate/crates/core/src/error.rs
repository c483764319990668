use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot tensor states together with operators")]
    MixedKinds,

    #[error("tensor product of an empty list")]
    EmptyTensor,

    #[error("factor index {index} out of range for a space with {len} factors")]
    FactorOutOfRange { index: usize, len: usize },

    #[error("factor {0} is not a position grid")]
    NotAGridFactor(usize),

    #[error("intervals [{0}, {1}] and [{2}, {3}] overlap")]
    OverlappingIntervals(f64, f64, f64, f64),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("collapse density vanishes everywhere on the grid")]
    DegenerateDensity,

    #[error("localization at x = {0} annihilates the state")]
    VanishingNorm(f64),

    #[error("unitarity violated: norm drift {0:e} over one segment")]
    UnitarityViolation(f64),

    #[error("trace drift {0:e} exceeds tolerance; reduce the time step")]
    TraceDrift(f64),

    #[error("spatial factors live on different grids")]
    MismatchedGrids,

    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NonHermitian(f64),

    #[error("probe data are not quadratic in the state: asymmetry {asymmetry:e} exceeds {threshold:e} for outcome {outcome}")]
    InconsistentProbes {
        outcome: String,
        asymmetry: f64,
        threshold: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// Errors that stem from bad input rather than a numerical breakdown.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidParameter { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
