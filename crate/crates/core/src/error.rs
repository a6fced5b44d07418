use thiserror::Error;

/// Errors produced by scenario generation, the solvers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to parse {what}: {message}")]
    Parse { what: &'static str, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),

    #[error("rank vector is not a permutation of 1..={0}")]
    NotAPermutation(usize),

    #[error("topology too sparse: some user had no eligible neighbour after {attempts} draws")]
    SparseTopology { attempts: usize },

    #[error("user {j} is not an eligible neighbour of user {i}")]
    NotEligible { i: usize, j: usize },

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("queue is unstable (utilization {utilization:.6} >= 1)")]
    UnstableQueue { utilization: f64 },

    #[error("users {i} and {j} cannot jointly reach the satisfaction threshold within capacity")]
    InfeasiblePair { i: usize, j: usize },

    #[error("user {user} reaches at most eta = {best_eta:.6} within capacity, below eta_min = {eta_min}")]
    InfeasibleUser { user: usize, best_eta: f64, eta_min: f64 },

    #[error("no pair solution supplied for eligible pair ({i}, {j})")]
    MissingPairSolution { i: usize, j: usize },

    #[error("exact mode supports at most {max} {what}, got {got}")]
    TooLarge { what: &'static str, max: usize, got: usize },
}

impl Error {
    /// Process exit code used by the CLI: 2 for infeasible input, 3 for
    /// configuration or parse failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SparseTopology { .. }
            | Error::InfeasiblePair { .. }
            | Error::InfeasibleUser { .. }
            | Error::UnstableQueue { .. }
            | Error::NotEligible { .. } => 2,
            Error::InvalidConfig(_) | Error::Parse { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn parse(what: &'static str, err: impl std::fmt::Display) -> Self {
        Error::Parse { what, message: err.to_string() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
