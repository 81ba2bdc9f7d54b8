//! Statevector simulation of quantum associative memories over binary patterns.
//!
//! Patterns are written as bit strings whose rightmost character is qubit 0,
//! so `"0110"` is basis index 6. Two storage circuits prepare the uniform
//! superposition of `k` patterns: branch splitting ([`encode_vm`], `2m + 2`
//! qubits) and the permutation technique ([`encode_pt`], `m + 1` qubits),
//! whose write network [`reduce`] shrinks. [`retrieval`] runs Grover-style
//! searches on the stored state and [`analysis`] tabulates their costs.

pub mod analysis;
pub mod circuit;
pub mod encode_pt;
pub mod encode_vm;
pub mod error;
pub mod kernel;
pub mod pattern;
pub mod peephole;
pub mod reduce;
pub mod retrieval;
pub mod state;
pub mod sweep;

pub use circuit::{Circuit, Gate, GateCounts, GateKind};
pub use encode_pt::{AddressMap, PtEncoding};
pub use error::{QamError, Result};
pub use pattern::{BinaryPattern, PatternSet};
pub use state::{Control, MeasurementOutcome, StateVector};
