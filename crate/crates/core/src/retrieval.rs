//! Grover-style retrieval over a stored pattern superposition.
//!
//! * [`standard_grover`]: mark the oracle set and reflect the whole register
//!   every rotation. On a non-uniform start state this loses the target.
//! * [`vm_retrieve`]: the first rotation marks the oracle set, every later
//!   rotation marks all stored patterns.
//! * [`pt_retrieve`]: after marking, undo the write network so the search
//!   runs as plain Grover on the `g` address wires, then redo it.
//!
//! The diffusion is `I - 2|s><s|`, so a fully amplified target can come out
//! with amplitude `-1`; probabilities are unaffected.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::encode_pt::PtEncoding;
use crate::encode_vm::encode_vm;
use crate::error::{QamError, Result};
use crate::pattern::{hamming, BinaryPattern, PatternSet};
use crate::state::{MeasurementOutcome, StateVector, COSET_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    ExactTarget,
    EpsilonBall,
}

/// The phase oracle: which basis states get their sign flipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub mode: OracleMode,
    pub query: BinaryPattern,
    pub epsilon: u32,
    pub marked: BTreeSet<usize>,
}

impl OracleSpec {
    /// Marks exactly the query state, stored or not.
    pub fn exact_target(query: BinaryPattern) -> Self {
        Self {
            mode: OracleMode::ExactTarget,
            query,
            epsilon: 0,
            marked: BTreeSet::from([query.index()]),
        }
    }

    /// Marked states that are also stored patterns.
    pub fn marked_stored(&self, patterns: &PatternSet) -> BTreeSet<usize> {
        self.marked
            .iter()
            .copied()
            .filter(|&i| patterns.contains_index(i))
            .collect()
    }
}

/// Stored patterns within Hamming distance `epsilon` of `query`.
pub fn build_oracle(patterns: &PatternSet, query: BinaryPattern, epsilon: u32) -> Result<OracleSpec> {
    check_query(patterns, &query)?;
    let mut marked = BTreeSet::new();
    for p in patterns.iter() {
        if hamming(p, &query)? <= epsilon {
            marked.insert(p.index());
        }
    }
    Ok(OracleSpec {
        mode: OracleMode::EpsilonBall,
        query,
        epsilon,
        marked,
    })
}

fn check_query(patterns: &PatternSet, query: &BinaryPattern) -> Result<()> {
    if query.dim() != patterns.dim() {
        return Err(QamError::Input(format!(
            "query {query} has {} bits, stored patterns have {}",
            query.dim(),
            patterns.dim()
        )));
    }
    Ok(())
}

/// Classical reference: the nearest stored pattern, first in input order on ties.
pub fn classical_nn(patterns: &PatternSet, query: BinaryPattern) -> Result<BinaryPattern> {
    check_query(patterns, &query)?;
    let mut best: Option<(u32, BinaryPattern)> = None;
    for p in patterns.iter() {
        let d = hamming(p, &query)?;
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, *p));
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| QamError::Input("empty pattern set".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalTrace {
    /// Initial state followed by the state after each rotation.
    pub snapshots: Vec<StateVector>,
    /// Basis states marked in each rotation.
    pub marked_sets: Vec<BTreeSet<usize>>,
    pub rotations: usize,
    pub oracle_calls: u64,
    /// Permutation trick only: the `g`-qubit address register right after
    /// marking and undoing the write network, one per rotation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub address_snapshots: Vec<StateVector>,
}

impl RetrievalTrace {
    fn new(initial: StateVector) -> Self {
        Self {
            snapshots: vec![initial],
            marked_sets: Vec::new(),
            rotations: 0,
            oracle_calls: 0,
            address_snapshots: Vec::new(),
        }
    }

    pub fn last(&self) -> &StateVector {
        self.snapshots.last().expect("trace holds the initial state")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub outcome: MeasurementOutcome,
    pub outcome_pattern: BinaryPattern,
    /// Probability of reading out any marked stored pattern.
    pub success_probability: f64,
    pub trace: RetrievalTrace,
    /// Set when no stored pattern is marked; the outcome is then just the most likely state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// How the final state is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Readout {
    /// Most probable basis state.
    #[default]
    Argmax,
    /// One seeded draw from the Born distribution.
    Sample(u64),
}

impl Readout {
    fn measure(self, state: &StateVector) -> Result<MeasurementOutcome> {
        match self {
            Readout::Argmax => state.argmax_outcome(),
            Readout::Sample(seed) => state.sample_outcome(seed),
        }
    }
}

/// `max(1, floor(pi/4 * sqrt(space / marked)))`.
pub fn default_rotations(space: usize, marked: usize) -> usize {
    if marked == 0 {
        return 1;
    }
    ((FRAC_PI_4 * (space as f64 / marked as f64).sqrt()).floor() as usize).max(1)
}

/// `sin^2((2 tau + 1) asin(sqrt(M / N)))`.
pub fn grover_success_probability(space: usize, marked: usize, rotations: usize) -> f64 {
    let theta = (marked as f64 / space as f64).sqrt().asin();
    ((2 * rotations + 1) as f64 * theta).sin().powi(2)
}

fn check_rotations(rotations: usize) -> Result<()> {
    if rotations == 0 {
        return Err(QamError::Input("at least one rotation is required".into()));
    }
    Ok(())
}

fn marked_probability(state: &StateVector, marked: &BTreeSet<usize>) -> f64 {
    marked.iter().map(|&i| state.probability(i)).sum()
}

fn report(
    data: &StateVector,
    dim: usize,
    oracle_hits: &BTreeSet<usize>,
    trace: RetrievalTrace,
    readout: Readout,
) -> Result<RetrievalReport> {
    let outcome = readout.measure(data)?;
    let warning = oracle_hits
        .is_empty()
        .then(|| "no stored pattern is marked by the oracle".to_string());
    Ok(RetrievalReport {
        outcome_pattern: BinaryPattern::new(outcome.index, dim)?,
        outcome,
        success_probability: marked_probability(data, oracle_hits),
        trace,
        warning,
    })
}

/// Mark-then-diffuse on the whole register, `rotations` times.
pub fn standard_grover(state: &StateVector, oracle: &OracleSpec, rotations: usize) -> Result<RetrievalTrace> {
    check_rotations(rotations)?;
    if oracle.marked.is_empty() {
        return Err(QamError::Oracle("the oracle marks no state".into()));
    }
    let wires: Vec<usize> = (0..state.num_qubits()).collect();
    let mut s = state.clone();
    let mut trace = RetrievalTrace::new(s.clone());
    for _ in 0..rotations {
        s.phase_mark(&oracle.marked)?;
        s.diffuse(&wires)?;
        trace.marked_sets.push(oracle.marked.clone());
        trace.snapshots.push(s.clone());
    }
    trace.rotations = rotations;
    trace.oracle_calls = rotations as u64;
    Ok(trace)
}

/// The uniform superposition of the stored patterns on `m` qubits.
pub fn stored_superposition(patterns: &PatternSet) -> Result<StateVector> {
    if patterns.len() == 1 {
        StateVector::basis(patterns.dim(), patterns.patterns()[0].index())
    } else {
        encode_vm(patterns)
    }
}

/// Standard Grover on the stored superposition, packaged as a report.
pub fn grover_retrieve(
    patterns: &PatternSet,
    oracle: &OracleSpec,
    rotations: Option<usize>,
    readout: Readout,
) -> Result<RetrievalReport> {
    check_query(patterns, &oracle.query)?;
    let n = 1usize << patterns.dim();
    let rotations = rotations.unwrap_or_else(|| default_rotations(n, oracle.marked.len()));
    let trace = standard_grover(&stored_superposition(patterns)?, oracle, rotations)?;
    let last = trace.last().clone();
    report(&last, patterns.dim(), &oracle.marked_stored(patterns), trace, readout)
}

/// Retrieval with the marked-all-stored rotations after the first one.
pub fn vm_retrieve(
    patterns: &PatternSet,
    oracle: &OracleSpec,
    rotations: Option<usize>,
    readout: Readout,
) -> Result<RetrievalReport> {
    check_query(patterns, &oracle.query)?;
    if oracle.marked.is_empty() {
        return Err(QamError::Oracle("the oracle marks no state".into()));
    }
    let (m, k) = (patterns.dim(), patterns.len());
    let rotations = rotations.unwrap_or_else(|| default_rotations(1 << m, oracle.marked.len()));
    check_rotations(rotations)?;
    let stored: BTreeSet<usize> = patterns.indices().into_iter().collect();
    let wires: Vec<usize> = (0..m).collect();
    let mut s = stored_superposition(patterns)?;
    let mut trace = RetrievalTrace::new(s.clone());
    for r in 0..rotations {
        let marks = if r == 0 { &oracle.marked } else { &stored };
        s.phase_mark(marks)?;
        s.diffuse(&wires)?;
        trace.marked_sets.push(marks.clone());
        trace.snapshots.push(s.clone());
    }
    trace.rotations = rotations;
    trace.oracle_calls = 1 + (rotations as u64 - 1) * k as u64;
    report(&s, m, &oracle.marked_stored(patterns), trace, readout)
}

/// Retrieval by conjugating the address-space diffusion with the write network.
pub fn pt_retrieve(
    encoding: &PtEncoding,
    oracle: &OracleSpec,
    rotations: Option<usize>,
    readout: Readout,
) -> Result<RetrievalReport> {
    let map = &encoding.map;
    let patterns = map.patterns();
    check_query(&patterns, &oracle.query)?;
    if oracle.marked.is_empty() {
        return Err(QamError::Oracle("the oracle marks no state".into()));
    }
    let (m, k, g) = (map.dim(), map.k(), map.g());
    let rotations = rotations.unwrap_or_else(|| default_rotations(k, oracle.marked.len()));
    check_rotations(rotations)?;
    let undo = encoding.write_network.inverse();
    let address_wires: Vec<usize> = (0..g).collect();
    let mut s = encoding.prepare()?;
    let mut trace = RetrievalTrace::new(s.clone());
    for _ in 0..rotations {
        s.phase_mark(&oracle.marked)?;
        undo.apply_to(&mut s)?;
        trace.address_snapshots.push(s.restrict(&address_wires, 0, COSET_TOLERANCE)?);
        if g > 0 {
            s.diffuse(&address_wires)?;
        } else {
            // a one-dimensional address space: the reflection is a sign flip
            s.phase_mark(&[0])?;
        }
        encoding.write_network.apply_to(&mut s)?;
        trace.marked_sets.push(oracle.marked.clone());
        trace.snapshots.push(s.clone());
    }
    trace.rotations = rotations;
    trace.oracle_calls = (rotations * k * 2) as u64;

    let flag_leak = s.leakage(1 << map.flag(), 0);
    if flag_leak > COSET_TOLERANCE {
        return Err(QamError::Consistency(format!(
            "flag qubit not at ground before measurement (leakage {flag_leak:.3e})"
        )));
    }
    let data_wires: Vec<usize> = (0..m).collect();
    let data = s.restrict(&data_wires, 0, COSET_TOLERANCE)?;
    report(&data, m, &oracle.marked_stored(&patterns), trace, readout)
}
