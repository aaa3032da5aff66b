use std::fmt;
use std::path::Path;

/// What a failure says about the input, which decides the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Blame {
    /// Bad flags or configuration files (exit 2).
    Config,
    /// Malformed or inconsistent data files (exit 3).
    Data,
    /// Anything else, e.g. an unwritable output directory (exit 1).
    Internal,
}

impl Blame {
    pub fn exit_code(self) -> i32 {
        match self {
            Blame::Config => 2,
            Blame::Data => 3,
            Blame::Internal => 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        blame: Blame,
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        blame: Blame,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] fedgraph_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn blame(&self) -> Blame {
        use fedgraph_core::Error as E;
        match self {
            CliError::Parse { blame, .. } | CliError::Io { blame, .. } => *blame,
            CliError::Config(_) => Blame::Config,
            CliError::Validation(_) => Blame::Data,
            CliError::Csv(_) => Blame::Internal,
            CliError::Core(e) => match e {
                E::Config(_) => Blame::Config,
                E::Validation(_)
                | E::EmptyInput(_)
                | E::Degenerate(_)
                | E::UndefinedHomophily(_) => Blame::Data,
                E::Shape { .. } | E::Contract(_) | E::NonFinite(_) => Blame::Internal,
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.blame().exit_code()
    }

    pub(crate) fn parse(blame: Blame, path: &str, line: usize, msg: impl fmt::Display) -> Self {
        CliError::Parse {
            blame,
            path: path.to_string(),
            line,
            msg: msg.to_string(),
        }
    }

    pub(crate) fn io(blame: Blame, path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            blame,
            path: path.display().to_string(),
            source,
        }
    }
}

pub(crate) fn read_text(path: &Path, blame: Blame) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(blame, path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(Blame::Internal, path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(Blame::Internal, path, e))
}
