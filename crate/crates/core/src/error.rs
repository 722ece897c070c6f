use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported strategy pair: {0}")]
    UnsupportedPair(String),

    #[error("degenerate population: size {0} is below 2")]
    DegeneratePopulation(usize),

    #[error("non-ergodic chain: {0}")]
    NonErgodicChain(String),

    #[error("state is off the simplex: {0}")]
    OffSimplex(String),

    #[error("integration blew up at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },

    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("non-finite reward {0}")]
    NonFiniteReward(f64),

    #[error("population size mismatch: {users} users vs {creators} creators")]
    PopulationMismatch { users: usize, creators: usize },

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::Config(_)
                | Error::UnsupportedPair(_)
                | Error::DegeneratePopulation(_)
                | Error::OffSimplex(_)
                | Error::PopulationMismatch { .. }
        )
    }
}
