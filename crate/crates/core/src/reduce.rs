//! The `reduce` pass for permutation-technique storage.
//!
//! Two stages:
//!
//! 1. **Assignment.** Build the Hamming distance matrix between the address
//!    states and the patterns and repeatedly fix the globally smallest cell
//!    (lowest address, then lowest pattern on ties), deleting its row and
//!    column.
//! 2. **Parallel writes.** Patterns that share a 1-bit not yet present in
//!    their address state form a cluster. All members of a cluster are flagged
//!    together and the shared bit is written with a single flag-controlled CX.
//!    Flag toggles on several branches at once use one MCX over the bits the
//!    branches have in common, provided no other branch matches those bits.
//!
//! Clusters are tried largest first (lowest bit on ties) and kept only when
//! they lower the total `MCX + CX` count, so the result never costs more than
//! the naive write network on the same assignment.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::encode_pt::{hadamard_stage, AddressMap, PtEncoding};
use crate::error::{QamError, Result};
use crate::pattern::{BinaryPattern, PatternSet};
use crate::peephole;
use crate::state::Control;

pub use crate::pattern::hamming;

/// Largest `k` for the exhaustive assignment search.
pub const MAX_EXHAUSTIVE_K: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub rows: Vec<BinaryPattern>,
    pub cols: Vec<BinaryPattern>,
    pub cells: Vec<Vec<u32>>,
}

impl DistanceMatrix {
    pub fn new(rows: &[BinaryPattern], cols: &[BinaryPattern]) -> Result<Self> {
        let cells = rows
            .iter()
            .map(|r| cols.iter().map(|c| hamming(r, c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows: rows.to_vec(),
            cols: cols.to_vec(),
            cells,
        })
    }
}

impl fmt::Display for DistanceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>w$} |", "d_H", w = self.rows.first().map_or(3, |r| r.dim().max(3)))?;
        for c in &self.cols {
            write!(f, " {c}")?;
        }
        writeln!(f)?;
        for (r, row) in self.rows.iter().zip(&self.cells) {
            write!(f, "{:>w$} |", r.to_string(), w = r.dim().max(3))?;
            for (c, d) in self.cols.iter().zip(row) {
                write!(f, " {d:>w$}", w = c.dim())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// One fixed mapping of the greedy assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pick {
    pub address: usize,
    pub pattern: usize,
    pub distance: u32,
}

/// Greedy minimum-cell elimination over `matrix`; returns picks in the order made.
pub fn greedy_picks(matrix: &DistanceMatrix) -> Vec<Pick> {
    let (nr, nc) = (matrix.rows.len(), matrix.cols.len());
    let mut row_alive = vec![true; nr];
    let mut col_alive = vec![true; nc];
    let mut picks = Vec::with_capacity(nr.min(nc));
    loop {
        let best = (0..nr)
            .filter(|&r| row_alive[r])
            .flat_map(|r| (0..nc).filter(|&c| col_alive[c]).map(move |c| (r, c)))
            .min_by_key(|&(r, c)| (matrix.cells[r][c], r, c));
        let Some((r, c)) = best else { break };
        row_alive[r] = false;
        col_alive[c] = false;
        picks.push(Pick {
            address: r,
            pattern: c,
            distance: matrix.cells[r][c],
        });
    }
    picks
}

/// The `k` address states `|0..0 j>` of an `m`-bit register.
pub fn address_states(k: usize, dim: usize) -> Result<Vec<BinaryPattern>> {
    (0..k).map(|j| BinaryPattern::new(j, dim)).collect()
}

/// Greedy address assignment for `patterns` (`k` must be a power of two).
pub fn assign_addresses(patterns: &PatternSet) -> Result<AddressMap> {
    let addresses = address_states(patterns.len(), patterns.dim())?;
    let matrix = DistanceMatrix::new(&addresses, patterns.patterns())?;
    let mut slots = vec![None; addresses.len()];
    for p in greedy_picks(&matrix) {
        slots[p.address] = Some(patterns.patterns()[p.pattern]);
    }
    AddressMap::new(slots.into_iter().map(|s| s.expect("square matrix")).collect())
}

/// Sum of Hamming distances between each address state and its pattern.
pub fn assignment_cost(map: &AddressMap) -> u32 {
    map.entries()
        .iter()
        .enumerate()
        .map(|(j, p)| (j ^ p.index()).count_ones())
        .sum()
}

/// Minimum assignment cost over all `k!` assignments (for reporting).
pub fn optimal_assignment_cost(patterns: &PatternSet) -> Result<u32> {
    let k = patterns.len();
    if k > MAX_EXHAUSTIVE_K {
        return Err(QamError::Size(format!(
            "exhaustive assignment limited to k <= {MAX_EXHAUSTIVE_K}, got {k}"
        )));
    }
    let idx = patterns.indices();
    let mut order: Vec<usize> = (0..k).collect();
    let mut best = u32::MAX;
    permute(&mut order, 0, &mut |perm| {
        let cost = perm
            .iter()
            .enumerate()
            .map(|(j, &p)| (j ^ idx[p]).count_ones())
            .sum::<u32>();
        best = best.min(cost);
    });
    Ok(best)
}

fn permute(items: &mut [usize], at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, visit);
        items.swap(at, i);
    }
}

/// A pattern with the bits that no longer need writing masked out (`I`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedPattern {
    pub pattern: BinaryPattern,
    pub mask: usize,
}

impl MaskedPattern {
    pub fn new(pattern: BinaryPattern, mask: usize) -> Result<Self> {
        if pattern.dim() < usize::BITS as usize && mask >> pattern.dim() != 0 {
            return Err(QamError::Input(format!(
                "mask {mask:#b} longer than pattern {pattern}"
            )));
        }
        Ok(Self { pattern, mask })
    }

    /// Parses the display form, e.g. `01I0`.
    pub fn parse(text: &str) -> Result<Self> {
        let bits: String = text.chars().map(|c| if c == 'I' { '0' } else { c }).collect();
        let mask = text
            .chars()
            .rev()
            .enumerate()
            .filter(|(_, c)| *c == 'I')
            .fold(0usize, |m, (i, _)| m | 1 << i);
        let pattern = bits.parse::<BinaryPattern>()?;
        // masked positions come from the address, so they hold the pattern's 1s
        let pattern = BinaryPattern::new(pattern.index() | mask, pattern.dim())?;
        Self::new(pattern, mask)
    }

    /// Unmasked 1-bits.
    pub fn open_ones(&self) -> usize {
        self.pattern.index() & !self.mask
    }
}

impl fmt::Display for MaskedPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.pattern.dim()).rev() {
            let c = if (self.mask >> q) & 1 == 1 {
                "I"
            } else if self.pattern.bit(q) {
                "1"
            } else {
                "0"
            };
            f.write_str(c)?;
        }
        Ok(())
    }
}

/// Shared unmasked 1-bits between patterns; the diagonal is not applicable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub patterns: Vec<MaskedPattern>,
    pub cells: Vec<Vec<Option<u32>>>,
}

impl fmt::Display for SimilarityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.patterns.first().map_or(3, |p| p.pattern.dim().max(3));
        write!(f, "{:>w$} |", "sim")?;
        for p in &self.patterns {
            write!(f, " {:>w$}", p.to_string())?;
        }
        writeln!(f)?;
        for (p, row) in self.patterns.iter().zip(&self.cells) {
            write!(f, "{:>w$} |", p.to_string())?;
            for cell in row {
                match cell {
                    Some(v) => write!(f, " {v:>w$}")?,
                    None => write!(f, " {:>w$}", "*")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn build_similarity(patterns: &[MaskedPattern]) -> Result<SimilarityMatrix> {
    if let Some(first) = patterns.first() {
        if let Some(bad) = patterns.iter().find(|p| p.pattern.dim() != first.pattern.dim()) {
            return Err(QamError::Input(format!(
                "pattern {} has dimension {}, expected {}",
                bad,
                bad.pattern.dim(),
                first.pattern.dim()
            )));
        }
    }
    let cells = patterns
        .iter()
        .enumerate()
        .map(|(i, a)| {
            patterns
                .iter()
                .enumerate()
                .map(|(j, b)| (i != j).then(|| (a.open_ones() & b.open_ones()).count_ones()))
                .collect()
        })
        .collect();
    Ok(SimilarityMatrix {
        patterns: patterns.to_vec(),
        cells,
    })
}

/// Masked forms of the non-identity entries: 1-bits already present in the address are `I`.
pub fn masked_patterns(map: &AddressMap) -> Vec<MaskedPattern> {
    map.entries()
        .iter()
        .enumerate()
        .filter(|(j, p)| p.index() != *j)
        .map(|(j, p)| MaskedPattern {
            pattern: *p,
            mask: j & p.index(),
        })
        .collect()
}

/// A set of branches sharing a 1-bit that is written once for all of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub bit: usize,
    /// Addresses of the member branches.
    pub members: Vec<usize>,
}

/// One MCX flag toggle: fires on every state whose `care` bits equal `value`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagCube {
    pub value: usize,
    pub care: usize,
    pub members: Vec<usize>,
}

impl FlagCube {
    fn contains(&self, state: usize) -> bool {
        state & self.care == self.value
    }

    pub fn controls(&self, dim: usize) -> Vec<Control> {
        (0..dim)
            .filter(|b| (self.care >> b) & 1 == 1)
            .map(|b| Control::new(b, (self.value >> b) & 1 == 1))
            .collect()
    }

    fn render(&self, dim: usize) -> String {
        (0..dim)
            .rev()
            .map(|b| {
                if (self.care >> b) & 1 == 0 {
                    'x'
                } else if (self.value >> b) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStep {
    /// Flag the listed branches.
    Entangle { cubes: Vec<FlagCube> },
    /// Write one bit into every flagged branch (a cluster write).
    ParallelWrite { bit: usize, members: Vec<usize> },
    /// Write bits into the single flagged branch.
    IndividualWrite { address: usize, bits: Vec<usize> },
    /// Unflag the listed branches.
    Disentangle { cubes: Vec<FlagCube> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducePlan {
    pub assignment: AddressMap,
    pub picks: Vec<Pick>,
    /// Clusters kept, in schedule order.
    pub clusters: Vec<Cluster>,
    pub steps: Vec<PlanStep>,
}

impl ReducePlan {
    pub fn mcx_count(&self) -> usize {
        self.steps
            .iter()
            .map(|s| match s {
                PlanStep::Entangle { cubes } | PlanStep::Disentangle { cubes } => cubes.len(),
                _ => 0,
            })
            .sum()
    }

    pub fn cx_count(&self) -> usize {
        self.steps
            .iter()
            .map(|s| match s {
                PlanStep::ParallelWrite { .. } => 1,
                PlanStep::IndividualWrite { bits, .. } => bits.len(),
                _ => 0,
            })
            .sum()
    }

    /// Human-readable walkthrough: distances, assignment, similarities, clusters, schedule.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        let map = &self.assignment;
        let dim = map.dim();
        let pat = |j: usize| map.pattern(j).to_string();
        let addr = |j: usize| map.address_state(j).to_string();
        let addresses = address_states(map.k(), dim).expect("addresses fit");
        let mut cols = map.entries().to_vec();
        cols.sort();
        if let Ok(d) = DistanceMatrix::new(&addresses, &cols) {
            out.push_str("distance matrix:\n");
            out.push_str(&d.to_string());
        }
        out.push_str("assignment:\n");
        for p in &self.picks {
            let sym = if p.distance == 0 { "=" } else { "->" };
            out.push_str(&format!(
                "  {} {sym} {}  (d_H = {})\n",
                addr(p.address),
                pat(p.address),
                p.distance
            ));
        }
        let masked = masked_patterns(map);
        if let Ok(s) = build_similarity(&masked) {
            if !masked.is_empty() {
                out.push_str("similarity matrix:\n");
                out.push_str(&s.to_string());
            }
        }
        out.push_str("clusters:\n");
        if self.clusters.is_empty() {
            out.push_str("  (none)\n");
        }
        for (n, c) in self.clusters.iter().enumerate() {
            let members: Vec<String> = c.members.iter().map(|&j| pat(j)).collect();
            out.push_str(&format!(
                "  {}: qubit {} shared by {}\n",
                n + 1,
                c.bit,
                members.join(", ")
            ));
        }
        out.push_str("schedule:\n");
        for step in &self.steps {
            let line = match step {
                PlanStep::Entangle { cubes } | PlanStep::Disentangle { cubes } => {
                    let verb = if matches!(step, PlanStep::Entangle { .. }) {
                        "entangle"
                    } else {
                        "disentangle"
                    };
                    cubes
                        .iter()
                        .map(|c| {
                            let who: Vec<String> = c.members.iter().map(|&j| pat(j)).collect();
                            format!("  {verb} {} [{}]  (MCX)", c.render(dim), who.join(", "))
                        })
                        .collect::<Vec<_>>()
                        .join("\n")
                }
                PlanStep::ParallelWrite { bit, members } => {
                    let who: Vec<String> = members.iter().map(|&j| pat(j)).collect();
                    format!("  write qubit {bit} in parallel for [{}]  (CX)", who.join(", "))
                }
                PlanStep::IndividualWrite { address, bits } => format!(
                    "  write qubits {:?} for {}  ({} CX)",
                    bits,
                    pat(*address),
                    bits.len()
                ),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str(&format!(
            "total: {} MCX, {} CX\n",
            self.mcx_count(),
            self.cx_count()
        ));
        out
    }
}

impl fmt::Display for ReducePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.explain())
    }
}

/// Branch bookkeeping while a schedule is built.
#[derive(Debug, Clone)]
struct Scheduler {
    full: usize,
    current: Vec<usize>,
    target: Vec<usize>,
    flagged: BTreeSet<usize>,
    steps: Vec<PlanStep>,
}

impl Scheduler {
    fn new(map: &AddressMap) -> Self {
        Self {
            full: (1usize << map.dim()) - 1,
            current: (0..map.k()).collect(),
            target: map.entries().iter().map(BinaryPattern::index).collect(),
            flagged: BTreeSet::new(),
            steps: Vec::new(),
        }
    }

    fn todo(&self, j: usize) -> usize {
        self.current[j] ^ self.target[j]
    }

    fn cube_is_exact(&self, cube: &FlagCube) -> bool {
        let hits: Vec<usize> = (0..self.current.len())
            .filter(|&b| cube.contains(self.current[b]))
            .collect();
        hits == cube.members
    }

    /// Groups `set` into as few exact cubes as the greedy pairwise merge finds.
    fn cubes_for(&self, set: &BTreeSet<usize>) -> Option<Vec<FlagCube>> {
        let mut cubes: Vec<FlagCube> = set
            .iter()
            .map(|&j| FlagCube {
                value: self.current[j],
                care: self.full,
                members: vec![j],
            })
            .collect();
        if !cubes.iter().all(|c| self.cube_is_exact(c)) {
            return None;
        }
        'merge: loop {
            for a in 0..cubes.len() {
                for b in a + 1..cubes.len() {
                    let care = cubes[a].care & cubes[b].care & !(cubes[a].value ^ cubes[b].value);
                    let mut members: Vec<usize> = cubes[a]
                        .members
                        .iter()
                        .chain(&cubes[b].members)
                        .copied()
                        .collect();
                    members.sort_unstable();
                    let merged = FlagCube {
                        value: cubes[a].value & care,
                        care,
                        members,
                    };
                    if self.cube_is_exact(&merged) {
                        cubes[a] = merged;
                        cubes.remove(b);
                        continue 'merge;
                    }
                }
            }
            break;
        }
        Some(cubes)
    }

    fn toggle(&mut self, set: &BTreeSet<usize>, entangle: bool) -> Option<()> {
        if set.is_empty() {
            return Some(());
        }
        let cubes = self.cubes_for(set)?;
        for j in set {
            if entangle {
                self.flagged.insert(*j);
            } else {
                self.flagged.remove(j);
            }
        }
        self.steps.push(if entangle {
            PlanStep::Entangle { cubes }
        } else {
            PlanStep::Disentangle { cubes }
        });
        Some(())
    }

    fn flag_exactly(&mut self, wanted: &BTreeSet<usize>) -> Option<()> {
        let release: BTreeSet<usize> = self.flagged.difference(wanted).copied().collect();
        let engage: BTreeSet<usize> = wanted.difference(&self.flagged).copied().collect();
        self.toggle(&release, false)?;
        self.toggle(&engage, true)
    }

    fn release_finished(&mut self) -> Option<()> {
        let done: BTreeSet<usize> = self
            .flagged
            .iter()
            .copied()
            .filter(|&j| self.todo(j) == 0)
            .collect();
        self.toggle(&done, false)
    }

    fn write_individual(&mut self, j: usize, bits: usize) {
        if bits == 0 {
            return;
        }
        debug_assert_eq!(self.flagged.iter().copied().collect::<Vec<_>>(), vec![j]);
        self.current[j] ^= bits;
        let list = (0..usize::BITS as usize)
            .filter(|b| (bits >> b) & 1 == 1)
            .collect();
        self.steps.push(PlanStep::IndividualWrite { address: j, bits: list });
    }

    /// All states distinct and no branch parked on another branch's target.
    fn is_clean(&self) -> bool {
        let n = self.current.len();
        (0..n).all(|a| {
            (0..n).all(|b| a == b || (self.current[a] != self.current[b] && self.current[a] != self.target[b]))
        })
    }

    fn run_cluster(&mut self, bit: usize, reserved: &[usize]) -> Option<Vec<usize>> {
        let members: BTreeSet<usize> = (0..self.current.len())
            .filter(|&j| (self.todo(j) >> bit) & 1 == 1 && (self.target[j] >> bit) & 1 == 1)
            .collect();
        if members.len() < 2 {
            return None;
        }
        self.flag_exactly(&members)?;
        for &j in &members {
            self.current[j] ^= 1 << bit;
        }
        self.steps.push(PlanStep::ParallelWrite {
            bit,
            members: members.iter().copied().collect(),
        });
        self.release_finished()?;
        if self.flagged.len() == 1 {
            let j = *self.flagged.iter().next().expect("one flagged branch");
            self.write_individual(j, self.todo(j) & !reserved[j]);
            self.release_finished()?;
        }
        self.is_clean().then(|| members.into_iter().collect())
    }

    fn finish(&mut self) -> Option<()> {
        self.release_finished()?;
        let mut order: Vec<usize> = self.flagged.iter().copied().collect();
        order.extend((0..self.current.len()).filter(|j| !self.flagged.contains(j)));
        for j in order {
            if self.todo(j) == 0 {
                continue;
            }
            self.flag_exactly(&BTreeSet::from([j]))?;
            self.write_individual(j, self.todo(j));
            self.release_finished()?;
        }
        self.flagged.is_empty().then_some(())
    }
}

/// Runs the schedule for the clusters tried in `order`; returns the kept clusters and steps.
fn schedule(map: &AddressMap, order: &[usize]) -> Option<(Vec<Cluster>, Vec<PlanStep>)> {
    let mut sched = Scheduler::new(map);
    let mut kept = Vec::new();
    for (n, &bit) in order.iter().enumerate() {
        // bits reserved for later clusters, per branch
        let reserved: Vec<usize> = (0..map.k())
            .map(|j| {
                order[n + 1..]
                    .iter()
                    .filter(|&&b| {
                        let t = sched.target[j];
                        ((j ^ t) >> b) & 1 == 1 && (t >> b) & 1 == 1
                    })
                    .fold(0, |acc, &b| acc | 1 << b)
            })
            .collect();
        let snapshot = sched.clone();
        match sched.run_cluster(bit, &reserved) {
            Some(members) => kept.push(Cluster { bit, members }),
            None => sched = snapshot,
        }
    }
    sched.finish()?;
    Some((kept, sched.steps))
}

fn cost(steps: &[PlanStep]) -> usize {
    steps
        .iter()
        .map(|s| match s {
            PlanStep::Entangle { cubes } | PlanStep::Disentangle { cubes } => cubes.len(),
            PlanStep::ParallelWrite { .. } => 1,
            PlanStep::IndividualWrite { bits, .. } => bits.len(),
        })
        .sum()
}

/// Candidate cluster bits: shared unwritten 1-bits, largest group first, lowest bit on ties.
pub fn candidate_bits(map: &AddressMap) -> Vec<(usize, usize)> {
    let mut groups: Vec<(usize, usize)> = (0..map.dim())
        .map(|b| {
            let size = map
                .entries()
                .iter()
                .enumerate()
                .filter(|(j, p)| ((j ^ p.index()) >> b) & 1 == 1 && p.bit(b))
                .count();
            (b, size)
        })
        .filter(|&(_, size)| size >= 2)
        .collect();
    groups.sort_by_key(|&(b, size)| (std::cmp::Reverse(size), b));
    groups
}

/// Plans the reduced write network for an explicit assignment.
///
/// Fails with a plan error if some pattern equals the address state of a
/// different entry (the greedy assignment never produces such maps).
pub fn plan_for_assignment(map: &AddressMap, picks: Vec<Pick>) -> Result<ReducePlan> {
    if let Some((j, p)) = map
        .entries()
        .iter()
        .enumerate()
        .find(|(j, p)| p.index() < map.k() && p.index() != *j)
    {
        return Err(QamError::Plan(format!(
            "pattern {p} is the address state of another entry than {}",
            map.address_state(j)
        )));
    }
    let unplannable = || QamError::Plan("no valid schedule for this assignment".into());
    let mut accepted: Vec<usize> = Vec::new();
    let (_, mut best_steps) = schedule(map, &accepted).ok_or_else(unplannable)?;
    for (bit, _) in candidate_bits(map) {
        let mut trial = accepted.clone();
        trial.push(bit);
        if let Some((_, steps)) = schedule(map, &trial) {
            if cost(&steps) < cost(&best_steps) {
                accepted = trial;
                best_steps = steps;
            }
        }
    }
    let (clusters, steps) = schedule(map, &accepted).ok_or_else(unplannable)?;
    Ok(ReducePlan {
        assignment: map.clone(),
        picks,
        clusters,
        steps,
    })
}

/// Greedy assignment followed by cluster planning.
pub fn plan_reduction(patterns: &PatternSet) -> Result<ReducePlan> {
    let addresses = address_states(patterns.len(), patterns.dim())?;
    let matrix = DistanceMatrix::new(&addresses, patterns.patterns())?;
    let map = assign_addresses(patterns)?;
    let picks = greedy_picks(&matrix)
        .into_iter()
        .map(|p| Pick {
            address: p.address,
            pattern: map
                .entries()
                .iter()
                .position(|e| *e == patterns.patterns()[p.pattern])
                .expect("picked pattern is assigned"),
            distance: p.distance,
        })
        .collect();
    plan_for_assignment(&map, picks)
}

/// How anti-controls are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlStyle {
    /// Polarity bits on the controls.
    Polarity,
    /// Positive controls wrapped in NOT gates.
    NotSandwich,
}

fn check_schedule(plan: &ReducePlan) -> Result<()> {
    let map = &plan.assignment;
    let mut current: Vec<usize> = (0..map.k()).collect();
    let mut flagged = BTreeSet::new();
    let bad = |msg: String| Err(QamError::Plan(msg));
    for step in &plan.steps {
        match step {
            PlanStep::Entangle { cubes } | PlanStep::Disentangle { cubes } => {
                let entangle = matches!(step, PlanStep::Entangle { .. });
                for cube in cubes {
                    let hits: Vec<usize> = (0..current.len())
                        .filter(|&b| current[b] & cube.care == cube.value)
                        .collect();
                    if hits != cube.members {
                        return bad(format!("flag toggle hits {hits:?}, expected {:?}", cube.members));
                    }
                    for &j in &cube.members {
                        let changed = if entangle {
                            flagged.insert(j)
                        } else {
                            flagged.remove(&j)
                        };
                        if !changed {
                            return bad(format!("unbalanced flag toggle on address {j}"));
                        }
                    }
                }
            }
            PlanStep::ParallelWrite { bit, members } => {
                if !members.iter().copied().eq(flagged.iter().copied()) {
                    return bad(format!("parallel write of qubit {bit} with a different flagged set"));
                }
                for &j in members {
                    current[j] ^= 1 << bit;
                }
            }
            PlanStep::IndividualWrite { address, bits } => {
                if flagged.len() != 1 || !flagged.contains(address) {
                    return bad(format!("write for address {address} while others are flagged"));
                }
                for b in bits {
                    current[*address] ^= 1 << b;
                }
            }
        }
    }
    if !flagged.is_empty() {
        return bad(format!("flag still entangled with {flagged:?}"));
    }
    for (j, p) in map.entries().iter().enumerate() {
        if current[j] != p.index() {
            return bad(format!("address {j} ends at {:#b}, expected {p}", current[j]));
        }
    }
    Ok(())
}

/// Emits the write network of `plan` without any clean-up pass.
pub fn emit_write_network(plan: &ReducePlan, style: ControlStyle) -> Result<Circuit> {
    check_schedule(plan)?;
    let map = &plan.assignment;
    let (dim, flag) = (map.dim(), map.flag());
    let mut c = Circuit::new(map.width());
    for step in &plan.steps {
        match step {
            PlanStep::Entangle { cubes } | PlanStep::Disentangle { cubes } => {
                let verb = if matches!(step, PlanStep::Entangle { .. }) {
                    "entangle"
                } else {
                    "disentangle"
                };
                for cube in cubes {
                    let label = format!("{verb} {}", cube.render(dim));
                    let controls = cube.controls(dim);
                    if controls.is_empty() {
                        c.push_labeled(Gate::x(flag), label)?;
                        continue;
                    }
                    match style {
                        ControlStyle::Polarity => {
                            c.push_labeled(Gate::mcx(controls, flag), label)?;
                        }
                        ControlStyle::NotSandwich => {
                            let negated: Vec<usize> =
                                controls.iter().filter(|c| !c.value).map(|c| c.wire).collect();
                            for &w in &negated {
                                c.push_labeled(Gate::x(w), label.clone())?;
                            }
                            let positive = controls.iter().map(|c| Control::on(c.wire)).collect();
                            c.push_labeled(Gate::mcx(positive, flag), label.clone())?;
                            for &w in &negated {
                                c.push_labeled(Gate::x(w), label.clone())?;
                            }
                        }
                    }
                }
            }
            PlanStep::ParallelWrite { bit, .. } => {
                c.push_labeled(Gate::cx(Control::on(flag), *bit), format!("parallel write q{bit}"))?;
            }
            PlanStep::IndividualWrite { address, bits } => {
                for &b in bits {
                    c.push_labeled(
                        Gate::cx(Control::on(flag), b),
                        format!("write q{b} for {}", map.pattern(*address)),
                    )?;
                }
            }
        }
    }
    Ok(c)
}

/// The reduced write network with redundant NOT gates removed.
pub fn build_reduced_write_network(plan: &ReducePlan) -> Result<Circuit> {
    Ok(peephole::optimize(&emit_write_network(plan, ControlStyle::NotSandwich)?))
}

pub fn build_reduced_encoding(plan: &ReducePlan) -> Result<PtEncoding> {
    Ok(PtEncoding {
        map: plan.assignment.clone(),
        hadamards: hadamard_stage(&plan.assignment)?,
        write_network: build_reduced_write_network(plan)?,
    })
}

/// Full reduced storage circuit: Hadamards, then the reduced write network.
pub fn build_reduced_circuit(plan: &ReducePlan) -> Result<Circuit> {
    Ok(build_reduced_encoding(plan)?.circuit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode_pt::{build_pt_encoding, PtOptions};

    fn p(s: &str) -> BinaryPattern {
        s.parse().unwrap()
    }

    fn example_set() -> PatternSet {
        PatternSet::parse(&["0011", "1001", "1111", "0110"]).unwrap()
    }

    #[test]
    fn distance_matrix_rows() {
        let addresses = address_states(4, 4).unwrap();
        let cols = [p("0011"), p("0110"), p("1001"), p("1111")];
        let d = DistanceMatrix::new(&addresses, &cols).unwrap();
        assert_eq!(
            d.cells,
            vec![vec![2, 2, 2, 4], vec![1, 3, 1, 3], vec![1, 1, 3, 3], vec![0, 2, 2, 2]]
        );
    }

    #[test]
    fn greedy_assignment_of_example() {
        let map = assign_addresses(&example_set()).unwrap();
        assert_eq!(map.entries(), &[p("1111"), p("1001"), p("0110"), p("0011")]);
        assert_eq!(assignment_cost(&map), 4 + 1 + 1);
    }

    #[test]
    fn identity_assignment() {
        let set = PatternSet::parse(&["011", "000", "010", "001"]).unwrap();
        let map = assign_addresses(&set).unwrap();
        assert_eq!(map.non_identity_count(), 0);
        let plan = plan_reduction(&set).unwrap();
        assert!(plan.steps.is_empty());
        let enc = build_reduced_encoding(&plan).unwrap();
        assert!(enc.write_network.is_empty());
    }

    #[test]
    fn similarity_cells() {
        let a = MaskedPattern::parse("01I0").unwrap();
        let b = MaskedPattern::parse("100I").unwrap();
        let c = MaskedPattern::parse("1111").unwrap();
        assert_eq!(a.to_string(), "01I0");
        let s = build_similarity(&[a, b, c]).unwrap();
        assert_eq!(s.cells[0][2], Some(1));
        assert_eq!(s.cells[0][1], Some(0));
        assert_eq!(s.cells[1][2], Some(1));
        assert_eq!(s.cells[1][1], None);

        let all = MaskedPattern::new(p("1111"), 0b1111).unwrap();
        let s2 = build_similarity(&[c, all]).unwrap();
        assert_eq!(s2.cells[0][1], Some(0));
        assert!(MaskedPattern::new(p("11"), 0b100).is_err());
        assert!(build_similarity(&[c, MaskedPattern::parse("11").unwrap()]).is_err());
    }

    #[test]
    fn masked_forms_from_assignment() {
        let map = assign_addresses(&example_set()).unwrap();
        let shown: Vec<String> = masked_patterns(&map).iter().map(|m| m.to_string()).collect();
        assert_eq!(shown, vec!["1111", "100I", "01I0"]);
    }

    #[test]
    fn example_plan_matches_walkthrough() {
        let plan = plan_reduction(&example_set()).unwrap();
        let bits: Vec<usize> = plan.clusters.iter().map(|c| c.bit).collect();
        assert_eq!(bits, vec![2, 3]);
        let members: Vec<Vec<String>> = plan
            .clusters
            .iter()
            .map(|c| c.members.iter().map(|&j| plan.assignment.pattern(j).to_string()).collect())
            .collect();
        assert_eq!(members, vec![vec!["1111", "0110"], vec!["1111", "1001"]]);
        assert_eq!((plan.mcx_count(), plan.cx_count()), (4, 4));

        let circuit = build_reduced_circuit(&plan).unwrap();
        let counts = circuit.count_gates();
        assert_eq!((counts.mcx, counts.cx, counts.x, counts.h), (4, 4, 0, 2));
        let s = circuit.run().unwrap();
        for i in 0..32 {
            let want = if [3, 6, 9, 15].contains(&i) { 0.5 } else { 0.0 };
            assert!((s.amplitude(i).re - want).abs() < 1e-12);
        }
        let text = plan.explain();
        assert!(text.contains("write qubit 2 in parallel"));
        assert!(text.contains("total: 4 MCX, 4 CX"));
    }

    #[test]
    fn sandwich_style_has_nots_that_fold_away() {
        let plan = plan_reduction(&example_set()).unwrap();
        let raw = emit_write_network(&plan, ControlStyle::NotSandwich).unwrap();
        assert!(raw.count_gates().x > 0);
        let folded = build_reduced_write_network(&plan).unwrap();
        assert_eq!(folded.count_gates().x, 0);
        assert_eq!(folded, emit_write_network(&plan, ControlStyle::Polarity).unwrap());
    }

    #[test]
    fn disjoint_ones_give_no_clusters() {
        let set = PatternSet::parse(&["10000", "01000", "00100", "11100"]).unwrap();
        let plan = plan_reduction(&set).unwrap();
        // 10000, 01000, 00100 share no 1-bit with one another
        let lone = PatternSet::parse(&["1000", "0100"]).unwrap();
        let lone_plan = plan_reduction(&lone).unwrap();
        assert!(lone_plan.clusters.is_empty());
        let naive = build_pt_encoding(&lone_plan.assignment, PtOptions::default()).unwrap();
        let reduced = build_reduced_encoding(&lone_plan).unwrap();
        assert_eq!(
            reduced.write_network.count_gates(),
            naive.write_network.count_gates()
        );
        let naive_wn = build_pt_encoding(&plan.assignment, PtOptions::default())
            .unwrap()
            .write_network
            .count_gates();
        assert!(plan.mcx_count() + plan.cx_count() <= (naive_wn.mcx + naive_wn.cx) as usize);
    }

    #[test]
    fn malformed_schedule_is_rejected() {
        let mut plan = plan_reduction(&example_set()).unwrap();
        plan.steps.pop();
        assert!(matches!(build_reduced_circuit(&plan), Err(QamError::Plan(_))));
    }

    #[test]
    fn foreign_address_patterns_are_refused() {
        let map = AddressMap::new(vec![p("01"), p("00")]).unwrap();
        assert!(matches!(plan_for_assignment(&map, vec![]), Err(QamError::Plan(_))));
    }

    #[test]
    fn exhaustive_optimum() {
        assert_eq!(optimal_assignment_cost(&example_set()).unwrap(), 6);
    }
}
