//! Gate-list circuits: simulation, inversion, counting and a line-oriented
//! text form.
//!
//! Text form, one gate per line:
//!
//! ```text
//! qubits 5
//! H 0
//! MCX !0 !1 !2 !3 4   # entangle address 0000
//! CX 4 2
//! CU 4 5 1.0471975511965979 3.141592653589793 3.141592653589793
//! ```
//!
//! Control wires come first and the target last; `!w` is an anti-control.
//! Text after `#` is a comment; a comment trailing a gate becomes its label.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QamError, Result};
use crate::state::{Control, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    CX,
    CCX,
    MCX,
    CU,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::CX => "CX",
            GateKind::CCX => "CCX",
            GateKind::MCX => "MCX",
            GateKind::CU => "CU",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H {
        target: usize,
    },
    X {
        target: usize,
    },
    Cx {
        control: Control,
        target: usize,
    },
    Ccx {
        controls: [Control; 2],
        target: usize,
    },
    Mcx {
        controls: Vec<Control>,
        target: usize,
    },
    /// Controlled `U(theta, phi, lambda)`.
    Cu {
        control: Control,
        target: usize,
        theta: f64,
        phi: f64,
        lambda: f64,
    },
}

impl Gate {
    pub fn h(target: usize) -> Self {
        Gate::H { target }
    }

    pub fn x(target: usize) -> Self {
        Gate::X { target }
    }

    pub fn cx(control: Control, target: usize) -> Self {
        Gate::Cx { control, target }
    }

    pub fn ccx(c0: Control, c1: Control, target: usize) -> Self {
        Gate::Ccx {
            controls: [c0, c1],
            target,
        }
    }

    pub fn mcx(controls: Vec<Control>, target: usize) -> Self {
        Gate::Mcx { controls, target }
    }

    pub fn cu(control: Control, target: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Gate::Cu {
            control,
            target,
            theta,
            phi,
            lambda,
        }
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::H { .. } => GateKind::H,
            Gate::X { .. } => GateKind::X,
            Gate::Cx { .. } => GateKind::CX,
            Gate::Ccx { .. } => GateKind::CCX,
            Gate::Mcx { .. } => GateKind::MCX,
            Gate::Cu { .. } => GateKind::CU,
        }
    }

    pub fn target(&self) -> usize {
        match self {
            Gate::H { target }
            | Gate::X { target }
            | Gate::Cx { target, .. }
            | Gate::Ccx { target, .. }
            | Gate::Mcx { target, .. }
            | Gate::Cu { target, .. } => *target,
        }
    }

    pub fn controls(&self) -> &[Control] {
        match self {
            Gate::H { .. } | Gate::X { .. } => &[],
            Gate::Cx { control, .. } | Gate::Cu { control, .. } => std::slice::from_ref(control),
            Gate::Ccx { controls, .. } => controls,
            Gate::Mcx { controls, .. } => controls,
        }
    }

    pub fn controls_mut(&mut self) -> &mut [Control] {
        match self {
            Gate::H { .. } | Gate::X { .. } => &mut [],
            Gate::Cx { control, .. } | Gate::Cu { control, .. } => std::slice::from_mut(control),
            Gate::Ccx { controls, .. } => controls,
            Gate::Mcx { controls, .. } => controls,
        }
    }

    /// Every wire the gate touches, controls first.
    pub fn wires(&self) -> impl Iterator<Item = usize> + '_ {
        self.controls()
            .iter()
            .map(|c| c.wire)
            .chain(std::iter::once(self.target()))
    }

    pub fn touches(&self, wire: usize) -> bool {
        self.wires().any(|w| w == wire)
    }

    /// Whether applying the gate twice is the identity.
    pub fn is_self_inverse(&self) -> bool {
        !matches!(self, Gate::Cu { .. })
    }

    pub fn inverse(&self) -> Gate {
        match self {
            // U(θ, φ, λ)† = U(-θ, -λ, -φ)
            Gate::Cu {
                control,
                target,
                theta,
                phi,
                lambda,
            } => Gate::Cu {
                control: *control,
                target: *target,
                theta: -theta,
                phi: -lambda,
                lambda: -phi,
            },
            other => other.clone(),
        }
    }

    fn validate(&self, width: usize) -> Result<()> {
        if let Gate::Mcx { controls, .. } = self {
            if controls.is_empty() {
                return Err(QamError::Wiring("MCX needs at least one control".into()));
            }
        }
        let mut seen = 0u64;
        for w in self.wires() {
            if w >= width {
                return Err(QamError::Index(format!(
                    "wire {w} outside a {width}-qubit circuit"
                )));
            }
            if seen & (1 << w) != 0 {
                return Err(QamError::Wiring(format!("wire {w} used twice in {self}")));
            }
            seen |= 1 << w;
        }
        Ok(())
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            Gate::H { target } => state.apply_h(*target),
            Gate::X { target } => state.apply_x(*target),
            Gate::Cx { control, target } => state.apply_cx(*control, *target),
            Gate::Ccx { controls, target } => state.apply_ccx(controls[0], controls[1], *target),
            Gate::Mcx { controls, target } => state.apply_mcx(controls, *target),
            Gate::Cu {
                control,
                target,
                theta,
                phi,
                lambda,
            } => state.apply_cu(*theta, *phi, *lambda, *control, *target),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().name())?;
        for c in self.controls() {
            if c.value {
                write!(f, " {}", c.wire)?;
            } else {
                write!(f, " !{}", c.wire)?;
            }
        }
        write!(f, " {}", self.target())?;
        if let Gate::Cu {
            theta, phi, lambda, ..
        } = self
        {
            write!(f, " {theta} {phi} {lambda}")?;
        }
        Ok(())
    }
}

/// Per-kind gate tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub h: u64,
    pub x: u64,
    pub cx: u64,
    pub ccx: u64,
    pub mcx: u64,
    pub cu: u64,
}

impl GateCounts {
    pub fn total(&self) -> u64 {
        self.h + self.x + self.cx + self.ccx + self.mcx + self.cu
    }

    fn bump(&mut self, kind: GateKind) {
        match kind {
            GateKind::H => self.h += 1,
            GateKind::X => self.x += 1,
            GateKind::CX => self.cx += 1,
            GateKind::CCX => self.ccx += 1,
            GateKind::MCX => self.mcx += 1,
            GateKind::CU => self.cu += 1,
        }
    }
}

impl Add for GateCounts {
    type Output = GateCounts;

    fn add(mut self, rhs: GateCounts) -> GateCounts {
        self += rhs;
        self
    }
}

impl AddAssign for GateCounts {
    fn add_assign(&mut self, rhs: GateCounts) {
        self.h += rhs.h;
        self.x += rhs.x;
        self.cx += rhs.cx;
        self.ccx += rhs.ccx;
        self.mcx += rhs.mcx;
        self.cu += rhs.cu;
    }
}

impl fmt::Display for GateCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "h={} x={} cx={} ccx={} mcx={} cu={}",
            self.h, self.x, self.cx, self.ccx, self.mcx, self.cu
        )
    }
}

/// An ordered gate list over a fixed number of wires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
    labels: Vec<Option<String>>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            gates: Vec::new(),
            labels: Vec::new(),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        self.push_with(gate, None)
    }

    pub fn push_labeled(&mut self, gate: Gate, label: impl Into<String>) -> Result<&mut Self> {
        self.push_with(gate, Some(label.into()))
    }

    fn push_with(&mut self, gate: Gate, label: Option<String>) -> Result<&mut Self> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        self.labels.push(label);
        Ok(self)
    }

    /// Appends every gate of `other`, keeping its labels.
    pub fn extend_from(&mut self, other: &Circuit) -> Result<()> {
        if other.width > self.width {
            return Err(QamError::Wiring(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.width, self.width
            )));
        }
        self.gates.extend(other.gates.iter().cloned());
        self.labels.extend(other.labels.iter().cloned());
        Ok(())
    }

    /// Replaces the gate list wholesale (used by rewrite passes).
    pub(crate) fn from_parts(width: usize, gates: Vec<Gate>, labels: Vec<Option<String>>) -> Self {
        debug_assert_eq!(gates.len(), labels.len());
        Self {
            width,
            gates,
            labels,
        }
    }

    /// Applies the gates in order to `state`.
    pub fn apply_to(&self, state: &mut StateVector) -> Result<()> {
        if state.num_qubits() != self.width {
            return Err(QamError::Wiring(format!(
                "{}-qubit circuit applied to a {}-qubit state",
                self.width,
                state.num_qubits()
            )));
        }
        self.gates.iter().try_for_each(|g| g.apply(state))
    }

    pub fn simulate(&self, initial: &StateVector) -> Result<StateVector> {
        let mut s = initial.clone();
        self.apply_to(&mut s)?;
        Ok(s)
    }

    /// Simulates from `|0...0>`.
    pub fn run(&self) -> Result<StateVector> {
        self.simulate(&StateVector::ground(self.width)?)
    }

    /// Reversed gate order with every gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            width: self.width,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            labels: self.labels.iter().rev().cloned().collect(),
        }
    }

    pub fn count_gates(&self) -> GateCounts {
        let mut counts = GateCounts::default();
        for g in &self.gates {
            counts.bump(g.kind());
        }
        counts
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.width)?;
        for (g, label) in self.gates.iter().zip(&self.labels) {
            match label {
                Some(l) => writeln!(f, "{g}  # {l}")?,
                None => writeln!(f, "{g}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = QamError;

    fn from_str(text: &str) -> Result<Self> {
        let mut circuit: Option<Circuit> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let (body, comment) = match raw.split_once('#') {
                Some((b, c)) => (b.trim(), Some(c.trim())),
                None => (raw.trim(), None),
            };
            if body.is_empty() {
                continue;
            }
            let err = |msg: String| QamError::Input(format!("line {}: {msg}", lineno + 1));
            let mut tokens = body.split_whitespace();
            let head = tokens.next().unwrap_or_default();
            let rest: Vec<&str> = tokens.collect();
            if head.eq_ignore_ascii_case("qubits") {
                let width = rest
                    .first()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err("expected `qubits <n>`".into()))?;
                circuit = Some(Circuit::new(width));
                continue;
            }
            let c = circuit
                .as_mut()
                .ok_or_else(|| err("gate before `qubits` header".into()))?;
            let gate = parse_gate(head, &rest).map_err(|e| err(e.to_string()))?;
            let label = comment.filter(|l| !l.is_empty()).map(str::to_string);
            c.push_with(gate, label).map_err(|e| err(e.to_string()))?;
        }
        circuit.ok_or_else(|| QamError::Input("missing `qubits` header".into()))
    }
}

fn parse_control(token: &str) -> Result<Control> {
    let (value, digits) = match token.strip_prefix('!') {
        Some(d) => (false, d),
        None => (true, token),
    };
    let wire = digits
        .parse()
        .map_err(|_| QamError::Input(format!("bad wire {token:?}")))?;
    Ok(Control::new(wire, value))
}

fn parse_wire(token: &str) -> Result<usize> {
    token
        .parse()
        .map_err(|_| QamError::Input(format!("bad wire {token:?}")))
}

fn parse_gate(head: &str, args: &[&str]) -> Result<Gate> {
    let arity = |n: usize| -> Result<()> {
        if args.len() != n {
            return Err(QamError::Input(format!(
                "{head} expects {n} operands, got {}",
                args.len()
            )));
        }
        Ok(())
    };
    let gate = match head.to_ascii_uppercase().as_str() {
        "H" => {
            arity(1)?;
            Gate::h(parse_wire(args[0])?)
        }
        "X" => {
            arity(1)?;
            Gate::x(parse_wire(args[0])?)
        }
        "CX" => {
            arity(2)?;
            Gate::cx(parse_control(args[0])?, parse_wire(args[1])?)
        }
        "CCX" => {
            arity(3)?;
            Gate::ccx(
                parse_control(args[0])?,
                parse_control(args[1])?,
                parse_wire(args[2])?,
            )
        }
        "MCX" => {
            if args.len() < 2 {
                return Err(QamError::Input("MCX needs controls and a target".into()));
            }
            let (controls, target) = args.split_at(args.len() - 1);
            Gate::mcx(
                controls
                    .iter()
                    .map(|t| parse_control(t))
                    .collect::<Result<_>>()?,
                parse_wire(target[0])?,
            )
        }
        "CU" => {
            arity(5)?;
            let num = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| QamError::Input(format!("bad angle {t:?}")))
            };
            Gate::cu(
                parse_control(args[0])?,
                parse_wire(args[1])?,
                num(args[2])?,
                num(args[3])?,
                num(args[4])?,
            )
        }
        other => return Err(QamError::Input(format!("unknown gate {other:?}"))),
    };
    Ok(gate)
}
