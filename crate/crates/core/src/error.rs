use thiserror::Error;

/// Errors surfaced by the simulator, oracle, and learners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("infeasible threshold cycle: {0}")]
    InfeasibleCycle(String),

    #[error("input contains non-finite value: {0}")]
    NonFinite(String),

    #[error("policy parameters diverged at event {event}: theta = ({theta_on:.2}, {theta_off:.2})")]
    Diverged {
        event: u64,
        theta_on: f64,
        theta_off: f64,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
