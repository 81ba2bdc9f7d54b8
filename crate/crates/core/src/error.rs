use thiserror::Error;

/// Errors raised by the simulator, the circuit builders and the retrieval routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QamError {
    /// A register or matrix would exceed the supported desk-scale size.
    #[error("size error: {0}")]
    Size(String),
    /// A qubit or basis index lies outside the register.
    #[error("index error: {0}")]
    Index(String),
    /// A gate touches the same wire twice, or a circuit does not fit the state.
    #[error("wiring error: {0}")]
    Wiring(String),
    /// Malformed or inconsistent user input (patterns, maps, files).
    #[error("input error: {0}")]
    Input(String),
    /// The state has (numerically) zero norm.
    #[error("normalization error: {0}")]
    Normalization(String),
    /// The oracle marks nothing that could be amplified.
    #[error("oracle error: {0}")]
    Oracle(String),
    /// A reduction schedule leaves the flag entangled or toggles it inconsistently.
    #[error("plan error: {0}")]
    Plan(String),
    /// A simulation invariant (ancilla purity, coset support) was violated.
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T, E = QamError> = std::result::Result<T, E>;
