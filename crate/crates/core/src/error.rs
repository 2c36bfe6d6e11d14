use thiserror::Error;

/// Errors raised by the simulation library.
///
/// `Config` covers anything a user can get wrong in an experiment description
/// (bad keys, out-of-range parameters); `Runtime` covers misuse of a live
/// episode and I/O failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("price {0} outside [0, 1]")]
    PriceOutOfRange(f64),
    #[error("demand {0} is negative or not finite")]
    InvalidDemand(f64),
    #[error("price index {index} out of range for {k} prices")]
    PriceIndexOutOfRange { index: usize, k: usize },
    #[error("episode horizon {0} exhausted")]
    HorizonExhausted(u64),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("unknown instance key `{0}`")]
    UnknownInstance(String),
    #[error("unknown policy key `{0}`")]
    UnknownPolicy(String),
    #[error("unknown figure preset `{0}`")]
    UnknownPreset(String),
    #[error("policy `{policy}` cannot run here: {reason}")]
    PolicyPrecondition { policy: String, reason: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("slope fit needs at least 3 positive points, got {0}")]
    TooFewPoints(usize),
    #[error("csv encoding failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors caused by the experiment description rather than by
    /// the environment the experiment runs in.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv(_) | Error::HorizonExhausted(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
