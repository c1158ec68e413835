use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("invalid response map: {0}")]
    InvalidMap(String),

    #[error("metric value {value} at frame {frame} is outside [0, 1]")]
    OutOfRange { frame: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("frame index {got} does not follow {prev}")]
    FrameOrder { prev: usize, got: usize },

    #[error("wealth factor {factor} at frame {frame} is not positive (lambda {lambda}, m {m})")]
    NonPositiveFactor {
        frame: usize,
        factor: f64,
        lambda: f64,
        m: f64,
    },

    #[error("monitor already alerted at frame {0}; it is halted")]
    Halted(usize),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
