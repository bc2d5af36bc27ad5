use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit {0} listed more than once")]
    RepeatedQubit(usize),

    #[error("qubit {qubit} is out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("outcome {outcome} has probability {probability:e}, below the impossible-outcome threshold")]
    ImpossibleOutcome { outcome: usize, probability: f64 },

    #[error("negative Schmidt coefficient {0}")]
    NegativeCoefficient(f64),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("Schmidt rank {rank} exceeds partition capacity {capacity}")]
    RankExceedsCapacity { rank: usize, capacity: usize },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("unphysical coherence times: T2 = {t2} exceeds 2*T1 = {twice_t1}")]
    UnphysicalCoherence { t2: f64, twice_t1: f64 },

    #[error("channel is not trace preserving (max deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("register of {requested} qubits exceeds the limit of {limit}")]
    SizeOverflow { requested: usize, limit: usize },

    #[error("branch enumeration exceeds {limit} outcome paths")]
    PathOverflow { limit: usize },

    #[error("outcome {outcome} at node {node} carries probability {probability:e} outside the decodable set")]
    Undecodable {
        node: usize,
        outcome: usize,
        probability: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
