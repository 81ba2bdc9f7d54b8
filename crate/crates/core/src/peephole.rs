//! Local rewrites that drop redundant NOT gates.
//!
//! * `X(w) G1 .. Gn X(w)` where every `Gi` touching `w` uses it only as a
//!   control becomes `G1' .. Gn'` with the polarity of `w` flipped.
//! * Two identical self-inverse gates with nothing in between on their wires
//!   cancel.

use crate::circuit::{Circuit, Gate};

type Slot = Option<(Gate, Option<String>)>;

fn next_touching(slots: &[Slot], from: usize, wire: usize) -> Option<usize> {
    (from..slots.len()).find(|&j| matches!(&slots[j], Some((g, _)) if g.touches(wire)))
}

fn fold_sandwiches(slots: &mut [Slot]) -> bool {
    let mut changed = false;
    for i in 0..slots.len() {
        let wire = match &slots[i] {
            Some((Gate::X { target }, _)) => *target,
            _ => continue,
        };
        let mut inner = Vec::new();
        let mut j = i + 1;
        let closing = loop {
            match next_touching(slots, j, wire) {
                None => break None,
                Some(at) => {
                    let (g, _) = slots[at].as_ref().expect("slot is occupied");
                    if matches!(g, Gate::X { target } if *target == wire) {
                        break Some(at);
                    }
                    if g.target() == wire {
                        break None;
                    }
                    inner.push(at);
                    j = at + 1;
                }
            }
        };
        if let Some(end) = closing {
            for at in inner {
                if let Some((g, _)) = slots[at].as_mut() {
                    for c in g.controls_mut().iter_mut().filter(|c| c.wire == wire) {
                        *c = c.flipped();
                    }
                }
            }
            slots[i] = None;
            slots[end] = None;
            changed = true;
        }
    }
    changed
}

fn same_gate(a: &Gate, b: &Gate) -> bool {
    if a.kind() != b.kind() || a.target() != b.target() {
        return false;
    }
    let mut ca = a.controls().to_vec();
    let mut cb = b.controls().to_vec();
    ca.sort();
    cb.sort();
    ca == cb
}

fn cancel_pairs(slots: &mut [Slot]) -> bool {
    let mut changed = false;
    for i in 0..slots.len() {
        let gate = match &slots[i] {
            Some((g, _)) if g.is_self_inverse() => g.clone(),
            _ => continue,
        };
        let wires: Vec<usize> = gate.wires().collect();
        let next = (i + 1..slots.len())
            .find(|&j| matches!(&slots[j], Some((g, _)) if wires.iter().any(|&w| g.touches(w))));
        if let Some(j) = next {
            if matches!(&slots[j], Some((g, _)) if same_gate(g, &gate)) {
                slots[i] = None;
                slots[j] = None;
                changed = true;
            }
        }
    }
    changed
}

/// Runs both rewrites to a fixpoint.
pub fn optimize(circuit: &Circuit) -> Circuit {
    let mut slots: Vec<Slot> = circuit
        .gates()
        .iter()
        .cloned()
        .zip(circuit.labels().iter().cloned())
        .map(Some)
        .collect();
    while fold_sandwiches(&mut slots) | cancel_pairs(&mut slots) {}
    let (gates, labels) = slots.into_iter().flatten().unzip();
    Circuit::from_parts(circuit.width(), gates, labels)
}
