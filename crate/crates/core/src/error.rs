use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("{what}: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    NonConvergence {
        what: String,
        estimate: f64,
        tolerance: f64,
    },

    #[error("spectral tail beyond k_max is {tail:.3e}, above the limit {limit:.3e}; enlarge the grid")]
    TailTooLarge { tail: f64, limit: f64 },

    #[error("spectral density of order {order} is not finite at k = 0")]
    RegularityCheckFailed { order: usize },

    #[error("q must lie in (0,1], got {0}")]
    InvalidAccommodation(f64),

    #[error("oscillatory transform at x = {x} did not converge")]
    OscillatoryNonConvergence { x: f64 },

    #[error("transport iteration did not converge in {iters} sweeps (residual {residual:.3e})")]
    MaxItersExceeded { iters: usize, residual: f64 },

    #[error("transport iteration diverging after {iters} sweeps")]
    DivergenceDetected { iters: usize },

    #[error("slip fit unstable: residual slope {slope:.3e}")]
    FitUnstable { slope: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
