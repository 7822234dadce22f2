use std::fmt;
use std::io;

use crate::config::ConfigError;

#[derive(Debug)]
pub enum AppError {
    Config(ConfigError),
    Library(cfpoisson::Error),
    Io(io::Error),
}

impl AppError {
    /// 1 for invalid input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Library(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Config(e) => write!(f, "invalid configuration: {e}"),
            AppError::Library(e) => write!(f, "{e}"),
            AppError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e)
    }
}

impl From<cfpoisson::Error> for AppError {
    fn from(e: cfpoisson::Error) -> Self {
        AppError::Library(e)
    }
}

impl From<io::Error> for AppError {
    fn from(e: io::Error) -> Self {
        AppError::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_failures_exit_two() {
        let e = AppError::from(cfpoisson::Error::PrecisionShortfall { needed: 10, got: 3 });
        assert_eq!(e.exit_code(), 2);
        assert_eq!(AppError::from(cfpoisson::Error::Domain("x".into())).exit_code(), 1);
        assert_eq!(AppError::from(ConfigError("x".into())).exit_code(), 1);
    }
}
