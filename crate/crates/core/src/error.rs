use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid attacker configuration: {0}")]
    InvalidAttacker(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})"
    )]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("degenerate spectrum: found {found} peaks, need {needed}")]
    DegenerateSpectrum { found: usize, needed: usize },

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error("unknown parameter `{name}` for {figure}")]
    UnknownParameter { figure: String, name: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
