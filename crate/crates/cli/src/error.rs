use std::fmt;

use aqg_core::agreement::AgreementError;
use aqg_core::dataset::DatasetError;
use aqg_core::generation::GenerationError;
use aqg_core::metrics::MetricError;
use aqg_core::prompting::PromptError;
use aqg_core::report::ReportError;
use aqg_core::retrieval::RetrievalError;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Provider = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Usage,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Data,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    /// Prefixes the message with what was being done.
    pub fn context(self, what: impl fmt::Display) -> Self {
        CliError {
            kind: self.kind,
            error: self.error.context(what.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError { kind: ExitKind::Data, error: e.into() }
            }
        }
    )*};
}

data_errors!(
    DatasetError,
    RetrievalError,
    MetricError,
    ReportError,
    AgreementError,
    std::io::Error
);

impl From<PromptError> for CliError {
    fn from(e: PromptError) -> Self {
        let kind = match e {
            PromptError::InvalidConfig(_) | PromptError::Template(_) => ExitKind::Usage,
            _ => ExitKind::Data,
        };
        CliError { kind, error: e.into() }
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        let kind = match &e {
            e if e.is_provider_error() => ExitKind::Provider,
            GenerationError::InvalidParams(_) | GenerationError::Config(_) => ExitKind::Usage,
            GenerationError::Prompt(PromptError::InvalidConfig(_) | PromptError::Template(_)) => ExitKind::Usage,
            _ => ExitKind::Data,
        };
        CliError { kind, error: e.into() }
    }
}
