use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is outside the support [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("density vanishes at {value}; virtual valuation is undefined")]
    Singularity { value: f64 },

    #[error("non-finite virtual valuation at quantile {quantile}")]
    Numeric { quantile: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{what} supports at most {max} agents, got {n}")]
    Capacity { what: &'static str, n: usize, max: usize },

    #[error("cannot parse {what} `{text}`: {reason}")]
    Parse {
        what: &'static str,
        text: String,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
