//! Dense statevector simulation.
//!
//! Qubit `i` is bit `i` of the basis index. Every gate is applied in place.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QamError, Result};
use crate::kernel;

/// Largest register the simulator will allocate (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

/// Tolerance for "this wire is in a definite basis state".
pub const COSET_TOLERANCE: f64 = 1e-10;

/// A control wire together with the bit value it requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Control {
    pub wire: usize,
    /// `true` for an ordinary control, `false` for an anti-control.
    pub value: bool,
}

impl Control {
    pub const fn on(wire: usize) -> Self {
        Self { wire, value: true }
    }

    pub const fn off(wire: usize) -> Self {
        Self { wire, value: false }
    }

    pub const fn new(wire: usize, value: bool) -> Self {
        Self { wire, value }
    }

    pub fn flipped(self) -> Self {
        Self {
            wire: self.wire,
            value: !self.value,
        }
    }
}

/// Controls matching the bits of `pattern` on wires `0..width`.
pub fn controls_matching(pattern: usize, width: usize) -> Vec<Control> {
    (0..width)
        .map(|w| Control::new(w, (pattern >> w) & 1 == 1))
        .collect()
}

/// Result of reading out a basis state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub probability: f64,
}

/// The 2x2 matrix `U(theta, phi, lambda)` without global phase.
pub fn u_matrix(theta: f64, phi: f64, lambda: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [
            Complex64::new(c, 0.0),
            -Complex64::from_polar(s, lambda),
        ],
        [
            Complex64::from_polar(s, phi),
            Complex64::from_polar(c, phi + lambda),
        ],
    ]
}

/// Rotation angle of the split operator `CS_p`: `2 asin(1/sqrt(p))`.
pub fn split_angle(p: u64) -> f64 {
    2.0 * (1.0 / (p as f64).sqrt()).asin()
}

/// Serialized as a list of `[re, im]` pairs in basis-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<[f64; 2]>", try_from = "Vec<[f64; 2]>")]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl From<StateVector> for Vec<[f64; 2]> {
    fn from(s: StateVector) -> Self {
        s.to_pairs()
    }
}

impl TryFrom<Vec<[f64; 2]>> for StateVector {
    type Error = QamError;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        Self::from_pairs(&pairs)
    }
}

impl StateVector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn ground(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// The computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let len = 1usize << num_qubits;
        if index >= len {
            return Err(QamError::Index(format!(
                "basis index {index} outside 0..{len}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two. No normalisation is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QamError::Size(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_width(num_qubits)?;
        Ok(Self { num_qubits, amps })
    }

    /// Real amplitudes, convenient for tests and fixtures.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    #[inline]
    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    #[inline]
    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        kernel::norm_sqr(&self.amps)
    }

    /// Largest elementwise distance to another state of the same width.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        assert_eq!(self.len(), other.len(), "state widths differ");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Amplitudes as `[re, im]` pairs in basis-index order.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.amps.iter().map(|a| [a.re, a.im]).collect()
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        Self::from_amplitudes(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.num_qubits {
            return Err(QamError::Index(format!(
                "qubit {wire} outside a {}-qubit register",
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Validates wires and returns `(mask, value)` for the controls.
    fn control_mask(&self, controls: &[Control], target: usize) -> Result<(usize, usize)> {
        self.check_wire(target)?;
        let mut mask = 0usize;
        let mut value = 0usize;
        for c in controls {
            self.check_wire(c.wire)?;
            let bit = 1usize << c.wire;
            if c.wire == target || mask & bit != 0 {
                return Err(QamError::Wiring(format!(
                    "wire {} used more than once in a gate",
                    c.wire
                )));
            }
            mask |= bit;
            if c.value {
                value |= bit;
            }
        }
        Ok((mask, value))
    }

    /// Applies a (possibly controlled) single-qubit unitary.
    pub fn apply_controlled_matrix(
        &mut self,
        matrix: [[Complex64; 2]; 2],
        controls: &[Control],
        target: usize,
    ) -> Result<()> {
        let (mask, value) = self.control_mask(controls, target)?;
        let [[m00, m01], [m10, m11]] = matrix;
        kernel::for_each_pair(&mut self.amps, target, |i, a, b| {
            if i & mask == value {
                let (x, y) = (*a, *b);
                *a = m00 * x + m01 * y;
                *b = m10 * x + m11 * y;
            }
        });
        Ok(())
    }

    pub fn apply_h(&mut self, target: usize) -> Result<()> {
        self.check_wire(target)?;
        kernel::for_each_pair(&mut self.amps, target, |_, a, b| {
            let (x, y) = (*a, *b);
            *a = (x + y) * FRAC_1_SQRT_2;
            *b = (x - y) * FRAC_1_SQRT_2;
        });
        Ok(())
    }

    pub fn apply_x(&mut self, target: usize) -> Result<()> {
        self.apply_mcx(&[], target)
    }

    pub fn apply_cx(&mut self, control: Control, target: usize) -> Result<()> {
        self.apply_mcx(&[control], target)
    }

    pub fn apply_ccx(&mut self, c0: Control, c1: Control, target: usize) -> Result<()> {
        self.apply_mcx(&[c0, c1], target)
    }

    /// Multi-controlled X with per-control polarity.
    pub fn apply_mcx(&mut self, controls: &[Control], target: usize) -> Result<()> {
        let (mask, value) = self.control_mask(controls, target)?;
        kernel::for_each_pair(&mut self.amps, target, |i, a, b| {
            if i & mask == value {
                std::mem::swap(a, b);
            }
        });
        Ok(())
    }

    /// Controlled `U(theta, phi, lambda)`.
    pub fn apply_cu(
        &mut self,
        theta: f64,
        phi: f64,
        lambda: f64,
        control: Control,
        target: usize,
    ) -> Result<()> {
        self.apply_controlled_matrix(u_matrix(theta, phi, lambda), &[control], target)
    }

    /// Negates the amplitudes at the given basis indices.
    pub fn phase_mark<'a, I>(&mut self, marked: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a usize>,
    {
        let set: BTreeSet<usize> = marked.into_iter().copied().collect();
        if let Some(&bad) = set.iter().find(|&&i| i >= self.len()) {
            return Err(QamError::Index(format!(
                "marked index {bad} outside 0..{}",
                self.len()
            )));
        }
        for i in set {
            self.amps[i] = -self.amps[i];
        }
        Ok(())
    }

    /// Reflection `I - 2|s><s|` about the uniform state of the `subspace`
    /// wires. Every other wire must be in a definite basis state.
    pub fn diffuse(&mut self, subspace: &[usize]) -> Result<()> {
        if subspace.is_empty() {
            return Err(QamError::Index("diffusion subspace is empty".into()));
        }
        let mut sub_mask = 0usize;
        for &w in subspace {
            self.check_wire(w)?;
            if sub_mask & (1 << w) != 0 {
                return Err(QamError::Wiring(format!("wire {w} repeated in subspace")));
            }
            sub_mask |= 1 << w;
        }
        let full_mask = self.len() - 1;
        if sub_mask == full_mask {
            let total = self.amps_sum();
            let shift = total * (2.0 / self.len() as f64);
            kernel::for_each_amp(&mut self.amps, |_, a| *a -= shift);
            return Ok(());
        }
        let rest_mask = full_mask & !sub_mask;
        let coset = self.dominant_coset(rest_mask);
        let leak = self.leakage(rest_mask, coset);
        if leak > COSET_TOLERANCE {
            return Err(QamError::Consistency(format!(
                "wires outside the diffusion subspace are not in a basis state (leakage {leak:.3e})"
            )));
        }
        let sub_size = 1usize << subspace.len();
        let mut sums = std::collections::HashMap::<usize, Complex64>::new();
        for (i, a) in self.amps.iter().enumerate() {
            *sums.entry(i & rest_mask).or_default() += a;
        }
        let scale = 2.0 / sub_size as f64;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a -= sums[&(i & rest_mask)] * scale;
        }
        Ok(())
    }

    fn amps_sum(&self) -> Complex64 {
        self.amps.iter().sum()
    }

    /// The value of the `mask` wires carrying the largest probability mass.
    pub fn dominant_coset(&self, mask: usize) -> usize {
        let mut weight = std::collections::BTreeMap::<usize, f64>::new();
        for (i, a) in self.amps.iter().enumerate() {
            *weight.entry(i & mask).or_default() += a.norm_sqr();
        }
        weight
            .into_iter()
            .fold((0usize, f64::NEG_INFINITY), |best, (k, w)| {
                if w > best.1 {
                    (k, w)
                } else {
                    best
                }
            })
            .0
    }

    /// Probability mass on basis states whose `mask` bits differ from `value`.
    pub fn leakage(&self, mask: usize, value: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != value & mask)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Restricts the state to `wires` (new qubit `j` is `wires[j]`) with all
    /// other wires fixed to the bits of `fixed`. Fails when more than
    /// `tolerance` probability lies outside that coset.
    pub fn restrict(&self, wires: &[usize], fixed: usize, tolerance: f64) -> Result<StateVector> {
        let mut keep = 0usize;
        for &w in wires {
            self.check_wire(w)?;
            keep |= 1 << w;
        }
        let rest = (self.len() - 1) & !keep;
        let leak = self.leakage(rest, fixed & rest);
        if leak > tolerance {
            return Err(QamError::Consistency(format!(
                "restriction discards probability {leak:.3e}"
            )));
        }
        let mut out = StateVector::ground(wires.len())?;
        for j in 0..out.len() {
            let mut i = fixed & rest;
            for (bit, &w) in wires.iter().enumerate() {
                if (j >> bit) & 1 == 1 {
                    i |= 1 << w;
                }
            }
            out.amps[j] = self.amps[i];
        }
        Ok(out)
    }

    /// Most probable basis state; the lowest index wins ties.
    pub fn argmax_outcome(&self) -> Result<MeasurementOutcome> {
        let total = self.norm_sqr();
        if total <= f64::EPSILON {
            return Err(QamError::Normalization("state has zero norm".into()));
        }
        let mut best = MeasurementOutcome {
            index: 0,
            probability: self.probability(0),
        };
        for i in 1..self.len() {
            let p = self.probability(i);
            if p > best.probability {
                best = MeasurementOutcome {
                    index: i,
                    probability: p,
                };
            }
        }
        Ok(best)
    }

    /// Draws one outcome from the Born distribution, reproducibly for a given seed.
    pub fn sample_outcome(&self, seed: u64) -> Result<MeasurementOutcome> {
        let total = self.norm_sqr();
        if total <= f64::EPSILON {
            return Err(QamError::Normalization("state has zero norm".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > 0.0 {
                last_nonzero = i;
            }
            acc += p;
            if r < acc {
                return Ok(MeasurementOutcome {
                    index: i,
                    probability: p,
                });
            }
        }
        Ok(MeasurementOutcome {
            index: last_nonzero,
            probability: self.probability(last_nonzero),
        })
    }
}

fn check_width(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(QamError::Size(format!(
            "qubit count {num_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn close(a: Complex64, re: f64) -> bool {
        (a - Complex64::new(re, 0.0)).norm() < EPS
    }

    fn real(state: &StateVector) -> Vec<f64> {
        state.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn ground_states() {
        assert_eq!(real(&StateVector::ground(1).unwrap()), vec![1.0, 0.0]);
        assert_eq!(real(&StateVector::ground(2).unwrap()), vec![1.0, 0.0, 0.0, 0.0]);
        let g4 = StateVector::ground(4).unwrap();
        assert_eq!(g4.len(), 16);
        assert!(close(g4.amplitude(0), 1.0));
        assert!(g4.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
        assert!(matches!(StateVector::ground(0), Err(QamError::Size(_))));
        assert!(matches!(StateVector::ground(25), Err(QamError::Size(_))));
    }

    #[test]
    fn hadamards() {
        let mut s = StateVector::ground(4).unwrap();
        for q in 0..4 {
            s.apply_h(q).unwrap();
        }
        assert!(s.amplitudes().iter().all(|&a| close(a, 0.25)));

        let mut one = StateVector::ground(1).unwrap();
        one.apply_h(0).unwrap();
        assert!(close(one.amplitude(0), FRAC_1_SQRT_2) && close(one.amplitude(1), FRAC_1_SQRT_2));
        one.apply_h(0).unwrap();
        assert!(one.max_abs_diff(&StateVector::ground(1).unwrap()) < EPS);
        assert!(matches!(one.apply_h(1), Err(QamError::Index(_))));
    }

    #[test]
    fn multi_controlled_x() {
        let mut s = StateVector::basis(4, 0b0111).unwrap();
        s.apply_mcx(&[Control::on(0), Control::on(1), Control::on(2)], 3)
            .unwrap();
        assert!(close(s.amplitude(0b1111), 1.0));
        s.apply_mcx(&[Control::on(0), Control::on(1), Control::on(2)], 3)
            .unwrap();
        assert!(close(s.amplitude(0b0111), 1.0));

        // anti-control: fires only when wire 1 is 0
        let mut t = StateVector::basis(3, 0b001).unwrap();
        t.apply_mcx(&[Control::on(0), Control::off(1)], 2).unwrap();
        assert!(close(t.amplitude(0b101), 1.0));

        let mut bell = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0]).unwrap();
        bell.apply_cx(Control::on(0), 1).unwrap();
        assert!(close(bell.amplitude(0), FRAC_1_SQRT_2) && close(bell.amplitude(3), FRAC_1_SQRT_2));

        assert!(matches!(
            t.apply_mcx(&[Control::on(0), Control::on(0)], 2),
            Err(QamError::Wiring(_))
        ));
        assert!(matches!(t.apply_cx(Control::on(1), 1), Err(QamError::Wiring(_))));
    }

    #[test]
    fn split_operator_actions() {
        // wire 0 = control (c1), wire 1 = target (c2)
        for p in [2u64, 3, 4, 8] {
            let theta = split_angle(p);
            let pf = p as f64;
            let mut untouched = StateVector::basis(2, 0b10).unwrap();
            untouched
                .apply_cu(theta, std::f64::consts::PI, std::f64::consts::PI, Control::on(0), 1)
                .unwrap();
            assert!(close(untouched.amplitude(0b10), 1.0));

            let mut split = StateVector::basis(2, 0b11).unwrap();
            split
                .apply_cu(theta, std::f64::consts::PI, std::f64::consts::PI, Control::on(0), 1)
                .unwrap();
            assert!(close(split.amplitude(0b01), 1.0 / pf.sqrt()));
            assert!(close(split.amplitude(0b11), ((pf - 1.0) / pf).sqrt()));
        }
        let mut s = StateVector::basis(2, 0b11).unwrap();
        s.apply_cu(split_angle(2), std::f64::consts::PI, std::f64::consts::PI, Control::on(0), 1)
            .unwrap();
        assert!(close(s.amplitude(0b01), FRAC_1_SQRT_2) && close(s.amplitude(0b11), FRAC_1_SQRT_2));
    }

    #[test]
    fn phase_marking() {
        let mut s = StateVector::ground(4).unwrap();
        s.amps = vec![Complex64::new(0.0, 0.0); 16];
        for i in [3, 6, 9, 15] {
            s.amps[i] = Complex64::new(0.5, 0.0);
        }
        let before = s.clone();
        s.phase_mark(&[6]).unwrap();
        assert!(close(s.amplitude(6), -0.5) && close(s.amplitude(3), 0.5));
        s.phase_mark(&[6]).unwrap();
        assert_eq!(s, before);
        s.phase_mark(&[]).unwrap();
        assert_eq!(s, before);
        assert!(matches!(s.phase_mark(&[16]), Err(QamError::Index(_))));
    }

    #[test]
    fn full_diffusion_reference_vectors() {
        let mut s = StateVector::from_real(&[
            0.0, 0.0, 0.0, 0.5, 0.0, 0.0, -0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5,
        ])
        .unwrap();
        s.diffuse(&[0, 1, 2, 3]).unwrap();
        let expect = [-1., -1., -1., 3., -1., -1., -5., -1., -1., 3., -1., -1., -1., -1., -1., 3.];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert!(close(*a, e / 8.0));
        }

        let mut t = StateVector::from_real(
            &[-1., -1., -1., -3., -1., -1., 5., -1., -1., -3., -1., -1., -1., -1., -1., -3.]
                .map(|v| v / 8.0),
        )
        .unwrap();
        t.diffuse(&[0, 1, 2, 3]).unwrap();
        let expect = [1., 1., 1., -1., 1., 1., 7., 1., 1., -1., 1., 1., 1., 1., 1., -1.];
        for (a, e) in t.amplitudes().iter().zip(expect) {
            assert!(close(*a, e / 8.0));
        }
    }

    #[test]
    fn subspace_diffusion() {
        // 3 wires, diffusion on wires 0 and 1, wire 2 at |0>
        let mut s = StateVector::from_real(&[0.5, 0.5, -0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        s.diffuse(&[0, 1]).unwrap();
        assert!((s.amplitude(2).norm() - 1.0).abs() < EPS);
        assert!(s.probabilities().iter().enumerate().all(|(i, p)| i == 2 || *p < EPS));

        let mut bad = StateVector::from_real(&[0.5, 0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(bad.diffuse(&[0, 1]), Err(QamError::Consistency(_))));
        assert!(matches!(bad.diffuse(&[0, 3]), Err(QamError::Index(_))));
        assert!(matches!(bad.diffuse(&[]), Err(QamError::Index(_))));
    }

    #[test]
    fn outcomes() {
        let mut s = StateVector::ground(4).unwrap();
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[6] = Complex64::new(-1.0, 0.0);
        let o = s.argmax_outcome().unwrap();
        assert_eq!(o.index, 6);
        assert!((o.probability - 1.0).abs() < EPS);

        let g = StateVector::ground(3).unwrap().argmax_outcome().unwrap();
        assert_eq!((g.index, g.probability), (0, 1.0));

        let uniform = StateVector::from_real(&[0.5; 4]).unwrap();
        assert_eq!(uniform.argmax_outcome().unwrap().index, 0);
        let a = uniform.sample_outcome(42).unwrap();
        let b = uniform.sample_outcome(42).unwrap();
        assert_eq!(a, b);
        let seen: BTreeSet<usize> = (0..64).map(|seed| uniform.sample_outcome(seed).unwrap().index).collect();
        assert_eq!(seen.len(), 4);

        let zero = StateVector::from_real(&[0.0; 4]).unwrap();
        assert!(matches!(zero.argmax_outcome(), Err(QamError::Normalization(_))));
        assert!(matches!(zero.sample_outcome(1), Err(QamError::Normalization(_))));
    }

    #[test]
    fn restriction() {
        // wire 2 (flag) at 0, keep wires 0 and 1
        let s = StateVector::from_real(&[0.5, 0.5, -0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let r = s.restrict(&[0, 1], 0, 1e-12).unwrap();
        assert_eq!(real(&r), vec![0.5, 0.5, -0.5, 0.5]);
        assert!(s.restrict(&[0, 1], 0b100, 1e-12).is_err());
    }
}
