use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration. `key` and `line` are set when
    /// the problem comes from a config file.
    #[error("configuration error{}: {message}", location(key, line))]
    Config {
        key: Option<String>,
        line: Option<usize>,
        message: String,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A non-finite or otherwise unusable numeric result. Monte Carlo runs
    /// attach the trial index and master seed so the draw can be replayed.
    #[error("numeric error{}: {message}", replay(trial, seed))]
    Numeric {
        message: String,
        trial: Option<u64>,
        seed: Option<u64>,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            key: None,
            line: None,
            message: message.into(),
        }
    }

    pub fn config_key(key: &str, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Config {
            key: Some(key.to_string()),
            line,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Error::Numeric {
            message: message.into(),
            trial: None,
            seed: None,
        }
    }

    /// Attaches replay information to a numeric error; other variants pass through.
    pub fn with_trial(self, trial: u64, seed: u64) -> Self {
        match self {
            Error::Numeric { message, .. } => Error::Numeric {
                message,
                trial: Some(trial),
                seed: Some(seed),
            },
            other => other,
        }
    }
}

fn location(key: &Option<String>, line: &Option<usize>) -> String {
    match (key, line) {
        (Some(k), Some(l)) => format!(" at line {l} (key `{k}`)"),
        (Some(k), None) => format!(" (key `{k}`)"),
        (None, Some(l)) => format!(" at line {l}"),
        (None, None) => String::new(),
    }
}

fn replay(trial: &Option<u64>, seed: &Option<u64>) -> String {
    match (trial, seed) {
        (Some(t), Some(s)) => format!(" in trial {t} (master seed {s})"),
        (Some(t), None) => format!(" in trial {t}"),
        _ => String::new(),
    }
}
