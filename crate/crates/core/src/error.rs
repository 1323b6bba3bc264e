use thiserror::Error;

/// Errors raised by the library. Each variant names the subsystem it came from
/// so messages surfaced by the CLI are module-qualified.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rep_theory: {0}")]
    RepTheory(String),

    #[error("symmetric_group: {0}")]
    SymmetricGroup(String),

    #[error("immanant: {0}")]
    Immanant(String),

    #[error("gt_basis: {0}")]
    GtBasis(String),

    #[error("irrep_matrices: {0}")]
    IrrepMatrices(String),

    #[error("kostant: {0}")]
    Kostant(String),

    #[error("simulator: {0}")]
    Simulator(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {context}: {cause}")]
    Io { context: String, cause: std::io::Error },

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, cause: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            cause,
        }
    }
}
