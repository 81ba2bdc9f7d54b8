//! Permutation-technique storage on `m + 1` wires.
//!
//! `k = 2^g` patterns are prepared by putting the low `g` data wires into a
//! uniform superposition (the address states `|0...0 j>`) and then mapping
//! every address state onto its pattern with a write network that uses one
//! extra flag wire (`q_m`): entangle the flag with the address state, toggle
//! the differing bits under flag control, disentangle the flag from the
//! pattern state.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{GateBudget, PredictedGates};
use crate::circuit::{Circuit, Gate};
use crate::error::{QamError, Result};
use crate::pattern::{BinaryPattern, PatternSet};
use crate::state::{controls_matching, Control, StateVector, MAX_QUBITS};

/// Largest `m` for which [`permutation_matrix`] materialises the matrix.
pub const MAX_MATRIX_DIM: usize = 12;

/// Bijection from the `k = 2^g` address states onto the stored patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressMap {
    dim: usize,
    g: usize,
    /// `entries[j]` is the pattern written from address `j`.
    entries: Vec<BinaryPattern>,
}

impl AddressMap {
    /// `patterns[j]` is assigned to address `j`.
    pub fn new(patterns: Vec<BinaryPattern>) -> Result<Self> {
        let set = PatternSet::new(patterns)?;
        let k = set.len();
        if !k.is_power_of_two() {
            return Err(QamError::Input(format!(
                "the permutation technique needs a power-of-two pattern count, got {k}"
            )));
        }
        let g = k.trailing_zeros() as usize;
        let dim = set.dim();
        if g > dim {
            return Err(QamError::Input(format!(
                "{k} patterns do not fit in {dim} qubits"
            )));
        }
        if dim + 1 > MAX_QUBITS {
            return Err(QamError::Size(format!(
                "pattern dimension {dim} needs {} qubits (max {MAX_QUBITS})",
                dim + 1
            )));
        }
        Ok(Self {
            dim,
            g,
            entries: set.patterns().to_vec(),
        })
    }

    /// Input-order assignment: address `j` holds the `j`-th pattern.
    pub fn naive(patterns: &PatternSet) -> Result<Self> {
        Self::new(patterns.patterns().to_vec())
    }

    /// Builds a map from `(address, pattern)` pairs in any order.
    pub fn from_pairs(pairs: &[(usize, BinaryPattern)]) -> Result<Self> {
        let k = pairs.len();
        let mut slots: Vec<Option<BinaryPattern>> = vec![None; k];
        for &(address, pattern) in pairs {
            let slot = slots.get_mut(address).ok_or_else(|| {
                QamError::Input(format!("address {address} outside 0..{k}"))
            })?;
            if slot.replace(pattern).is_some() {
                return Err(QamError::Input(format!("address {address} assigned twice")));
            }
        }
        Self::new(slots.into_iter().map(Option::unwrap).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of address wires (`k = 2^g`).
    #[inline]
    pub fn g(&self) -> usize {
        self.g
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    /// Flag wire index.
    #[inline]
    pub fn flag(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.dim + 1
    }

    pub fn pattern(&self, address: usize) -> BinaryPattern {
        self.entries[address]
    }

    pub fn entries(&self) -> &[BinaryPattern] {
        &self.entries
    }

    pub fn patterns(&self) -> PatternSet {
        PatternSet::new(self.entries.clone()).expect("validated on construction")
    }

    /// Embedded basis state of address `j` (high `m - g` bits zero).
    pub fn address_state(&self, address: usize) -> BinaryPattern {
        BinaryPattern::new(address, self.dim).expect("address fits in m bits")
    }

    /// Number of entries whose pattern differs from its own address state.
    pub fn non_identity_count(&self) -> usize {
        self.entries
            .iter()
            .enumerate()
            .filter(|(j, p)| p.index() != *j)
            .count()
    }

    /// Address whose pattern has basis index `index`, if stored.
    pub fn address_of(&self, index: usize) -> Option<usize> {
        self.entries.iter().position(|p| p.index() == index)
    }
}

impl fmt::Display for AddressMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, p) in self.entries.iter().enumerate() {
            for q in (0..self.g.max(1)).rev() {
                f.write_str(if (j >> q) & 1 == 1 { "1" } else { "0" })?;
            }
            writeln!(f, " -> {p}")?;
        }
        Ok(())
    }
}

impl FromStr for AddressMap {
    type Err = QamError;

    /// Lines `address-bits -> pattern-bits`; `#` comments and blank lines are ignored.
    /// The address may be written with `g` bits or as the full `m`-bit state.
    fn from_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| QamError::Input(format!("line {}: {msg}", lineno + 1));
            let (addr, pat) = line
                .split_once("->")
                .ok_or_else(|| err("expected `address -> pattern`"))?;
            let addr: BinaryPattern = addr.trim().parse().map_err(|e: QamError| err(&e.to_string()))?;
            let pat: BinaryPattern = pat.trim().parse().map_err(|e: QamError| err(&e.to_string()))?;
            if addr.dim() > pat.dim() {
                return Err(err("address wider than pattern"));
            }
            pairs.push((addr.index(), pat));
        }
        if pairs.is_empty() {
            return Err(QamError::Input("address map is empty".into()));
        }
        Self::from_pairs(&pairs)
    }
}

/// Options for the naive write network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PtOptions {
    /// Emit nothing for entries whose pattern already equals the address state.
    pub skip_identity: bool,
}

impl Default for PtOptions {
    fn default() -> Self {
        Self {
            skip_identity: true,
        }
    }
}

/// A permutation-technique preparation split into its two stages.
#[derive(Debug, Clone, PartialEq)]
pub struct PtEncoding {
    pub map: AddressMap,
    /// `H` on the `g` address wires.
    pub hadamards: Circuit,
    /// The permutation `P` restricted to the prepared support.
    pub write_network: Circuit,
}

impl PtEncoding {
    pub fn width(&self) -> usize {
        self.map.width()
    }

    pub fn circuit(&self) -> Circuit {
        let mut c = self.hadamards.clone();
        c.extend_from(&self.write_network)
            .expect("stages share the register width");
        c
    }

    /// Full `(m+1)`-qubit prepared state.
    pub fn prepare(&self) -> Result<StateVector> {
        self.circuit().run()
    }

    /// The `m` data wires of the prepared state (flag must be at ground).
    pub fn data_state(&self) -> Result<StateVector> {
        let full = self.prepare()?;
        let wires: Vec<usize> = (0..self.map.dim()).collect();
        full.restrict(&wires, 0, 1e-12)
    }
}

pub(crate) fn hadamard_stage(map: &AddressMap) -> Result<Circuit> {
    let mut c = Circuit::new(map.width());
    for w in 0..map.g() {
        c.push_labeled(Gate::h(w), "address superposition")?;
    }
    Ok(c)
}

struct Emitter<'a> {
    map: &'a AddressMap,
    circuit: Circuit,
}

impl Emitter<'_> {
    fn flag_toggle(&mut self, state: usize, label: String) -> Result<()> {
        let controls = controls_matching(state, self.map.dim());
        self.circuit
            .push_labeled(Gate::mcx(controls, self.map.flag()), label)?;
        Ok(())
    }

    fn writes(&mut self, diff: usize, label: &str) -> Result<()> {
        let flag = self.map.flag();
        for b in (0..self.map.dim()).filter(|b| (diff >> b) & 1 == 1) {
            self.circuit
                .push_labeled(Gate::cx(Control::on(flag), b), label.to_string())?;
        }
        Ok(())
    }

    fn fmt(&self, state: usize) -> String {
        BinaryPattern::new(state, self.map.dim())
            .expect("state fits")
            .to_string()
    }

    /// Moves a branch from `from` into the unoccupied state `to`.
    fn relocate(&mut self, from: usize, to: usize) -> Result<()> {
        let (a, b) = (self.fmt(from), self.fmt(to));
        self.flag_toggle(from, format!("entangle {a}"))?;
        self.writes(from ^ to, &format!("write {a} -> {b}"))?;
        self.flag_toggle(to, format!("disentangle {b}"))
    }

    /// Exchanges the branches at the occupied states `x` and `y`.
    fn exchange(&mut self, x: usize, y: usize) -> Result<()> {
        let (a, b) = (self.fmt(x), self.fmt(y));
        self.flag_toggle(x, format!("entangle {a}"))?;
        self.flag_toggle(y, format!("entangle {b}"))?;
        self.writes(x ^ y, &format!("exchange {a} <-> {b}"))?;
        self.flag_toggle(y, format!("disentangle {b}"))?;
        self.flag_toggle(x, format!("disentangle {a}"))
    }
}

/// Write network for `map`.
///
/// Entries are processed in address order. An entry whose pattern is still
/// occupied by another address branch waits until that branch has moved;
/// entries left in a cycle are resolved by exchanging two branches at once.
pub fn write_network(map: &AddressMap, options: PtOptions) -> Result<Circuit> {
    let mut e = Emitter {
        map,
        circuit: Circuit::new(map.width()),
    };
    let k = map.k();
    let target: Vec<usize> = map.entries().iter().map(BinaryPattern::index).collect();
    let mut current: Vec<usize> = (0..k).collect();
    let mut occupant: HashMap<usize, usize> = (0..k).map(|j| (j, j)).collect();
    let mut pending: BTreeSet<usize> = (0..k).filter(|&j| target[j] != j).collect();

    if !options.skip_identity {
        for j in (0..k).filter(|&j| target[j] == j) {
            let s = e.fmt(j);
            e.flag_toggle(j, format!("entangle {s}"))?;
            e.flag_toggle(j, format!("disentangle {s}"))?;
        }
    }

    while let Some(&first) = pending.iter().next() {
        let free = pending
            .iter()
            .copied()
            .find(|&j| !occupant.contains_key(&target[j]));
        if let Some(j) = free {
            e.relocate(current[j], target[j])?;
            occupant.remove(&current[j]);
            occupant.insert(target[j], j);
            current[j] = target[j];
            pending.remove(&j);
        } else {
            let j = first;
            let (x, y) = (current[j], target[j]);
            let other = occupant[&y];
            e.exchange(x, y)?;
            current[j] = y;
            current[other] = x;
            occupant.insert(y, j);
            occupant.insert(x, other);
            pending.remove(&j);
            if current[other] == target[other] {
                pending.remove(&other);
            }
        }
    }
    Ok(e.circuit)
}

pub fn build_pt_encoding(map: &AddressMap, options: PtOptions) -> Result<PtEncoding> {
    Ok(PtEncoding {
        map: map.clone(),
        hadamards: hadamard_stage(map)?,
        write_network: write_network(map, options)?,
    })
}

/// Full storage circuit: `g` Hadamards followed by the write network.
pub fn build_pt_circuit(map: &AddressMap) -> Result<Circuit> {
    Ok(build_pt_encoding(map, PtOptions::default())?.circuit())
}

/// Encodes in input order and returns the `m` data wires.
pub fn encode_pt(patterns: &PatternSet) -> Result<StateVector> {
    build_pt_encoding(&AddressMap::naive(patterns)?, PtOptions::default())?.data_state()
}

/// Explicit `2^m x 2^m` permutation matrix of an address map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationMatrix {
    pub n: usize,
    /// `images[i]` is the row holding the 1 of column `i`: `P e_i = e_images[i]`.
    pub images: Vec<usize>,
    /// Transpositions whose left-to-right composition equals `images`.
    pub swaps: Vec<(usize, usize)>,
}

impl PermutationMatrix {
    pub fn matrix(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.n]; self.n];
        for (col, &row) in self.images.iter().enumerate() {
            m[row][col] = 1;
        }
        m
    }

    /// `P v` for a real vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &x) in v.iter().enumerate() {
            out[self.images[i]] = x;
        }
        out
    }

    pub fn transpose(&self) -> PermutationMatrix {
        let mut inv = vec![0; self.n];
        for (i, &r) in self.images.iter().enumerate() {
            inv[r] = i;
        }
        PermutationMatrix {
            n: self.n,
            swaps: cycle_swaps(&inv),
            images: inv,
        }
    }
}

fn cycle_swaps(images: &[usize]) -> Vec<(usize, usize)> {
    let mut seen = vec![false; images.len()];
    let mut swaps = Vec::new();
    for start in 0..images.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut x = images[start];
        while x != start {
            seen[x] = true;
            swaps.push((start, x));
            x = images[x];
        }
    }
    swaps
}

/// The permutation matrix sending address state `j` to pattern `j`.
///
/// Patterns that are not themselves address states are sent back to the
/// address at the start of their chain, so disjoint entries become plain
/// transpositions and every other basis state is fixed.
pub fn permutation_matrix(map: &AddressMap) -> Result<PermutationMatrix> {
    if map.dim() > MAX_MATRIX_DIM {
        return Err(QamError::Size(format!(
            "explicit permutation matrix limited to m <= {MAX_MATRIX_DIM}, got {}",
            map.dim()
        )));
    }
    let n = 1usize << map.dim();
    let k = map.k();
    let mut images: Vec<usize> = (0..n).collect();
    let inverse: BTreeMap<usize, usize> = map
        .entries()
        .iter()
        .enumerate()
        .map(|(j, p)| (p.index(), j))
        .collect();
    for (j, p) in map.entries().iter().enumerate() {
        images[j] = p.index();
    }
    for (&s, _) in inverse.iter().filter(|(&s, _)| s >= k) {
        let mut x = s;
        images[s] = loop {
            let a = inverse[&x];
            if !inverse.contains_key(&a) {
                break a;
            }
            x = a;
        };
    }
    Ok(PermutationMatrix {
        n,
        swaps: cycle_swaps(&images),
        images,
    })
}

/// Formula counts `H: k`, `MCX: 2k` next to the counts of the built circuit.
pub fn pt_gate_budget(map: &AddressMap) -> Result<GateBudget> {
    Ok(GateBudget {
        predicted: PredictedGates::pt(map.k() as u64),
        actual: build_pt_circuit(map)?.count_gates(),
    })
}
