use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("photon number {n} exceeds truncation n_max = {n_max}")]
    FockOutOfRange { n: usize, n_max: usize },

    #[error("atomic state {0:?} is not in the symmetric basis")]
    UnknownAtomicState([usize; 3]),

    #[error("operator space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("unsupported transition pair ({0}, {1})")]
    UnsupportedPair(usize, usize),

    #[error("invalid Hamiltonian parameters: {0}")]
    InvalidHamiltonian(String),

    #[error("guard band {guard} is not allowed for n_max = {n_max}")]
    InvalidGuard { guard: usize, n_max: usize },

    #[error("zero detuning on coupled pair ({0}, {1})")]
    ZeroDetuning(usize, usize),

    #[error("not in the dispersive regime: {0}")]
    NotDispersive(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error(
        "coherent state with mean photon number {n_bar} needs n_max >= {required} (tail {tail:e} at n_max = {n_max})"
    )]
    TruncationUnsafe {
        n_bar: f64,
        n_max: usize,
        required: usize,
        tail: f64,
    },

    #[error("not a weight vector: {0}")]
    NotWeightVector(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
