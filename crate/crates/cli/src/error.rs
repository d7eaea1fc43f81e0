use periodpoly_core::bounds::BoundsError;
use periodpoly_core::construct::ConstructError;
use periodpoly_core::lvalues::LValueError;
use periodpoly_core::newform::NewformError;
use periodpoly_core::period::PeriodError;
use periodpoly_lmfdb::{CacheError, LmfdbError};
use thiserror::Error;

/// Process exit codes. Each error class has its own code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    Failed = 1,
    NotFound = 2,
    Network = 3,
    Precision = 4,
    Parse = 5,
    Validation = 6,
    Numerical = 7,
    Io = 8,
    Usage = 9,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub const ALL: [Exit; 10] = [
        Exit::Ok,
        Exit::Failed,
        Exit::NotFound,
        Exit::Network,
        Exit::Precision,
        Exit::Parse,
        Exit::Validation,
        Exit::Numerical,
        Exit::Io,
        Exit::Usage,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            Exit::Ok => "success; every verified form passed the circle check",
            Exit::Failed => "a root left the circle, or a batch entry failed",
            Exit::NotFound => "unknown label or missing input",
            Exit::Network => "network failure, or --offline with no cached entry",
            Exit::Precision => "too few coefficients for the error budget",
            Exit::Parse => "malformed coefficient file or API response",
            Exit::Validation => "descriptor violates a newform invariant",
            Exit::Numerical => "numerical failure (root finding, root number, bounds)",
            Exit::Io => "file-system error",
            Exit::Usage => "invalid command-line usage",
        }
    }
}

pub fn exit_code_help() -> String {
    let mut s = String::from("Exit codes:\n");
    for e in Exit::ALL {
        s.push_str(&format!("  {}  {}\n", e.code(), e.describe()));
    }
    s
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("precision: {0}")]
    Precision(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Newform(#[from] NewformError),
    #[error(transparent)]
    LValue(#[from] LValueError),
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Lmfdb(#[from] LmfdbError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.as_ref().display().to_string();
        move |source| CliError::Io { path, source }
    }

    pub fn exit(&self) -> Exit {
        match self {
            CliError::NotFound(_) => Exit::NotFound,
            CliError::Precision(_) => Exit::Precision,
            CliError::Validation(_) => Exit::Validation,
            CliError::Usage(_) => Exit::Usage,
            CliError::Io { .. } => Exit::Io,
            CliError::Csv(_) => Exit::Io,
            CliError::Newform(e) => match e {
                NewformError::Io { .. } => Exit::Io,
                NewformError::Parse(_) | NewformError::Schema(_) | NewformError::Gap { .. } => Exit::Parse,
                NewformError::Invalid(_) => Exit::Validation,
                NewformError::Precision { .. } => Exit::Precision,
                NewformError::Domain { .. } => Exit::Numerical,
            },
            CliError::LValue(e) => match e {
                LValueError::Budget { .. } | LValueError::Precision { .. } => Exit::Precision,
                LValueError::Invalid(_) => Exit::Validation,
                _ => Exit::Numerical,
            },
            CliError::Period(_) | CliError::Bounds(_) | CliError::Construct(_) => Exit::Numerical,
            CliError::Lmfdb(e) => match e {
                LmfdbError::NotFound(_) => Exit::NotFound,
                LmfdbError::InsufficientData { .. } => Exit::Precision,
                LmfdbError::Network { .. } => Exit::Network,
                LmfdbError::Parse { .. } => Exit::Parse,
                LmfdbError::Invalid { .. } => Exit::Validation,
                LmfdbError::Cache(CacheError::Io { .. }) => Exit::Io,
                LmfdbError::Cache(CacheError::Corrupt { .. }) => Exit::Parse,
            },
        }
    }
}
