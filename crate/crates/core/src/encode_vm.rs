//! Branch-splitting storage circuit (Ventura-Martinez).
//!
//! The register is `|memory; c2, c1; load>`: load wires `q0..q(m-1)`, `c1 = q(m)`,
//! `c2 = q(m+1)` and the memory wires `q(m+2)..q(2m+1)`. The memory branch
//! holding finished patterns has `c2 = 0`; the single processing branch has
//! `c2 = 1`. Each step peels amplitude `1/sqrt(p)` off the processing branch
//! with `CS_p`, `p = k + 1 - i`, and writes the step's pattern into the new
//! branch. The last pattern is written into the processing branch itself,
//! which is then relabelled as a memory branch.

use std::f64::consts::PI;

use crate::analysis::{GateBudget, PredictedGates};
use crate::circuit::{Circuit, Gate};
use crate::error::{QamError, Result};
use crate::pattern::{BinaryPattern, PatternSet};
use crate::state::{split_angle, Control, StateVector, MAX_QUBITS};

/// Wire assignment of the branch-splitting circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VmLayout {
    m: usize,
}

impl VmLayout {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || 2 * m + 2 > MAX_QUBITS {
            return Err(QamError::Size(format!(
                "pattern dimension {m} needs {} qubits (max {MAX_QUBITS})",
                2 * m + 2
            )));
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn width(&self) -> usize {
        2 * self.m + 2
    }

    pub fn load(&self, bit: usize) -> usize {
        bit
    }

    pub fn c1(&self) -> usize {
        self.m
    }

    pub fn c2(&self) -> usize {
        self.m + 1
    }

    pub fn memory(&self, bit: usize) -> usize {
        self.m + 2 + bit
    }

    pub fn load_wires(&self) -> Vec<usize> {
        (0..self.m).collect()
    }

    pub fn memory_wires(&self) -> Vec<usize> {
        (0..self.m).map(|b| self.memory(b)).collect()
    }
}

/// Split parameter used at (1-based) step `i` of `k`.
pub fn split_parameter(k: usize, step: usize) -> u64 {
    (k + 1 - step) as u64
}

struct Builder {
    layout: VmLayout,
    circuit: Circuit,
}

impl Builder {
    fn push(&mut self, gate: Gate, label: &str) -> Result<()> {
        self.circuit.push_labeled(gate, label)?;
        Ok(())
    }

    fn set_load(&mut self, pattern: &BinaryPattern, label: &str) -> Result<()> {
        for b in (0..self.layout.m).filter(|&b| pattern.bit(b)) {
            self.push(Gate::x(self.layout.load(b)), label)?;
        }
        Ok(())
    }

    /// ccX(load_b, c2 -> memory_b) for every bit: touches the processing branch only.
    fn copy_into_processing(&mut self, label: &str) -> Result<()> {
        let l = self.layout;
        for b in 0..l.m {
            self.push(
                Gate::ccx(Control::on(l.load(b)), Control::on(l.c2()), l.memory(b)),
                label,
            )?;
        }
        Ok(())
    }

    /// cX(load_b -> memory_b) for every bit: touches all branches.
    fn xor_load_into_memory(&mut self, label: &str) -> Result<()> {
        let l = self.layout;
        for b in 0..l.m {
            self.push(Gate::cx(Control::on(l.load(b)), l.memory(b)), label)?;
        }
        Ok(())
    }

    fn invert_memory(&mut self, label: &str) -> Result<()> {
        for w in self.layout.memory_wires() {
            self.push(Gate::x(w), label)?;
        }
        Ok(())
    }

    /// MCX(memory == 1...1 -> c1).
    fn entangle_c1(&mut self, label: &str) -> Result<()> {
        let l = self.layout;
        let controls = l.memory_wires().into_iter().map(Control::on).collect();
        self.push(Gate::mcx(controls, l.c1()), label)
    }
}

/// Builds the storage circuit for `patterns` (k >= 2) on `2m + 2` wires.
pub fn build_vm_circuit(patterns: &PatternSet) -> Result<Circuit> {
    let k = patterns.len();
    if k < 2 {
        return Err(QamError::Input(format!(
            "branch-splitting storage needs at least 2 patterns, got {k}"
        )));
    }
    let layout = VmLayout::new(patterns.dim())?;
    let mut b = Builder {
        layout,
        circuit: Circuit::new(layout.width()),
    };
    b.push(Gate::x(layout.c2()), "mark processing branch")?;

    let (last, head) = patterns
        .patterns()
        .split_last()
        .expect("pattern set has at least two entries");
    for (idx, pattern) in head.iter().enumerate() {
        let step = idx + 1;
        let tag = |what: &str| format!("pattern {step}: {what}");
        b.set_load(pattern, &tag("load"))?;
        if step > 1 {
            b.copy_into_processing(&tag("copy into processing branch"))?;
            b.xor_load_into_memory(&tag("copy into all branches"))?;
        }
        b.invert_memory(&tag("invert memory"))?;
        b.entangle_c1(&tag("entangle c1"))?;
        let p = split_parameter(k, step);
        b.push(
            Gate::cu(Control::on(layout.c1()), layout.c2(), split_angle(p), PI, PI),
            &tag(&format!("split CS_{p}")),
        )?;
        b.entangle_c1(&tag("undo entangle c1"))?;
        b.invert_memory(&tag("undo invert memory"))?;
        b.xor_load_into_memory(&tag("write pattern / flip back"))?;
        b.copy_into_processing(&tag("uncompute processing branch"))?;
        b.set_load(pattern, &tag("reset load"))?;
    }

    let tag = |what: &str| format!("pattern {k}: {what}");
    b.set_load(last, &tag("load"))?;
    b.copy_into_processing(&tag("write into processing branch"))?;
    // The processing branch is the only one whose memory equals the last pattern.
    let controls = (0..layout.m)
        .map(|bit| Control::new(layout.memory(bit), last.bit(bit)))
        .collect();
    b.push(Gate::mcx(controls, layout.c2()), &tag("convert to memory branch"))?;
    b.set_load(last, &tag("reset load"))?;
    Ok(b.circuit)
}

/// The memory register of a finished storage run, with load and controls at ground.
pub fn memory_register(state: &StateVector, layout: VmLayout, tolerance: f64) -> Result<StateVector> {
    state.restrict(&layout.memory_wires(), 0, tolerance)
}

/// Encodes `patterns` and returns the `m`-qubit memory register.
pub fn encode_vm(patterns: &PatternSet) -> Result<StateVector> {
    let layout = VmLayout::new(patterns.dim())?;
    let full = build_vm_circuit(patterns)?.run()?;
    memory_register(&full, layout, 1e-10)
}

/// Gate-count formulas `U: k-1`, `CCX: k m`, `MCX: 2(k-1)` next to the counts of the built circuit.
pub fn vm_gate_budget(patterns: &PatternSet) -> Result<GateBudget> {
    let (k, m) = (patterns.len() as u64, patterns.dim() as u64);
    Ok(GateBudget {
        predicted: PredictedGates::vm(k, m),
        actual: build_vm_circuit(patterns)?.count_gates(),
    })
}
