use std::fmt;
use std::path::Path;

/// Error carrying the process exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Invalid flags or configuration, or a missing input file. Exit 2.
    Config(String),
    /// Inputs that cannot be parsed or processed. Exit 3.
    Data(String),
    /// An output violated an invariant the toolkit guarantees. Exit 4.
    Internal(String),
}

pub type CliResult<T> = Result<T, Failure>;

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<gazeattn_core::Error> for Failure {
    fn from(e: gazeattn_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Config(format!("input file not found: {}", path.display())))
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    require_file(path)?;
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Attaches a context prefix to a core error.
pub trait Context<T> {
    fn context(self, what: impl fmt::Display) -> CliResult<T>;
}

impl<T> Context<T> for gazeattn_core::Result<T> {
    fn context(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure::Data(format!("{what}: {e}")))
    }
}
