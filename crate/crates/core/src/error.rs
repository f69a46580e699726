use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (unsorted times, empty grid, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A state or parameter outside the model's admissible domain.
    #[error("input outside admissible domain: {0}")]
    Domain(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite model evaluation of {what} at u={u:?}, theta={theta:?}")]
    ModelEvaluation {
        what: &'static str,
        u: Vec<f64>,
        theta: Vec<f64>,
    },

    /// phi exceeded the Poisson rate it was supposed to be dominated by.
    #[error("rate bound breached: phi={phi} > rate={rate} at u={u:?}, theta={theta:?}")]
    BoundViolation {
        phi: f64,
        rate: f64,
        u: Vec<f64>,
        theta: Vec<f64>,
    },

    #[error("resource limit reached: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// An augmentation is missing information a density evaluation needs.
    #[error("internal invariant broken: {0}")]
    Invariant(String),

    #[error("improper posterior: {0}")]
    Improper(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by user input rather than numerics or resources.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParams(_) | Error::Precondition(_)
        )
    }
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
