use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver and the benchmark driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("x = {x} lies outside the domain [{left}, {right}]")]
    OutsideDomain { x: f64, left: f64, right: f64 },

    #[error("inadmissible state: rho = {rho:e}, theta = {theta:e}")]
    Inadmissible { rho: f64, theta: f64 },

    #[error("singular {0}x{0} cell system")]
    SingularSystem(usize),

    #[error("periodic sweep has no unique solution (unit transmission {transmission:e})")]
    PeriodicSweepDegenerate { transmission: f64 },

    #[error("conservation fix needs at least 3 velocities, grid has {0}")]
    RankDeficient(usize),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("maximum wave speed {0:e} gives no time scale")]
    NoWaveScale(f64),

    #[error("step {step} (t = {time}) failed: {source}")]
    StepFailed {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {what}: {msg}")]
    Parse { what: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
