//! Dense statevector simulation over the {RY, CX} gate set.
//!
//! Basis indices are little-endian: qubit `q` is bit `q` of the index, so
//! qubit 0 is the least-significant bit.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts (2^24 amplitudes).
pub const MAX_QUBITS: usize = 24;

/// Norm tolerance used when validating externally supplied states.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zero basis state |0…0⟩.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    /// The computational basis state with the given index.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_register(num_qubits)?;
        if index >= 1 << num_qubits {
            return Err(Error::Config(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps explicit amplitudes. The length must be a power of two and the
    /// state must be normalized within [`NORM_TOLERANCE`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_register(num_qubits)?;
        let state = StateVector {
            num_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Domain(format!("state is not normalized (norm² = {norm})")));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Full measurement distribution over all 2^n basis states.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        match *gate {
            Gate::Ry { target, angle } => self.apply_ry(target, angle),
            Gate::Cx { control, target } => self.apply_cx(control, target),
        }
        Ok(())
    }

    fn apply_ry(&mut self, target: usize, angle: f64) {
        let (s, c) = (angle * 0.5).sin_cos();
        let stride = 1usize << target;
        for block in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = x0 * c - x1 * s;
                *a1 = x0 * s + x1 * c;
            }
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    /// Marginal distribution of `qubits`. Outcome `b` has bit `i` equal to
    /// the value measured on `qubits[i]`.
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        check_subset(self.num_qubits, qubits)?;
        let mut table = vec![0.0; 1 << qubits.len()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            let outcome = qubits
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &q)| acc | (((index >> q) & 1) << i));
            table[outcome] += amp.norm_sqr();
        }
        Ok(table)
    }

    /// Probability that every qubit in `qubits` measures 0.
    pub fn all_zero_probability(&self, qubits: &[usize]) -> Result<f64> {
        check_subset(self.num_qubits, qubits)?;
        let mask = qubits.iter().fold(0usize, |m, &q| m | (1 << q));
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }
}

fn check_register(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "register size {num_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

fn check_subset(num_qubits: usize, qubits: &[usize]) -> Result<()> {
    let mut seen = 0usize;
    for &q in qubits {
        if q >= num_qubits {
            return Err(Error::Config(format!(
                "qubit {q} out of range for {num_qubits} qubits"
            )));
        }
        if seen & (1 << q) != 0 {
            return Err(Error::Config(format!("qubit {q} listed twice")));
        }
        seen |= 1 << q;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    /// exp(-i θ Y / 2): |0⟩ ↦ cos(θ/2)|0⟩ + sin(θ/2)|1⟩.
    Ry { target: usize, angle: f64 },
    Cx { control: usize, target: usize },
}

impl Gate {
    pub fn ry(target: usize, angle: f64) -> Gate {
        Gate::Ry { target, angle }
    }

    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::Cx { control, target }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        match *self {
            Gate::Ry { target, angle } => {
                if target >= num_qubits {
                    return Err(Error::Config(format!(
                        "RY target {target} out of range for {num_qubits} qubits"
                    )));
                }
                if !angle.is_finite() {
                    return Err(Error::Config(format!("RY angle {angle} is not finite")));
                }
            }
            Gate::Cx { control, target } => {
                if control >= num_qubits || target >= num_qubits {
                    return Err(Error::Config(format!(
                        "CX({control}->{target}) out of range for {num_qubits} qubits"
                    )));
                }
                if control == target {
                    return Err(Error::Config(format!(
                        "CX control and target are both {control}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry { target, angle } => Gate::Ry {
                target,
                angle: -angle,
            },
            cx @ Gate::Cx { .. } => cx,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Ry { target, angle } => write!(f, "RY({angle}) q{target}"),
            Gate::Cx { control, target } => write!(f, "CX q{control}->q{target}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        check_register(num_qubits)?;
        Ok(Circuit {
            num_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut circuit = Circuit::new(num_qubits)?;
        for gate in gates {
            circuit.push(gate)?;
        }
        Ok(circuit)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends all gates of `other`, which must act on the same register.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::Config(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.num_qubits, self.num_qubits
            )));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// U† for this circuit: gates reversed, RY angles negated.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Runs the circuit on `state` in place.
    pub fn apply_to(&self, state: &mut StateVector) -> Result<()> {
        if state.num_qubits != self.num_qubits {
            return Err(Error::Config(format!(
                "circuit has {} qubits but state has {}",
                self.num_qubits, state.num_qubits
            )));
        }
        for gate in &self.gates {
            state.apply(gate)?;
        }
        Ok(())
    }
}

/// Returns `gate` applied to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// Runs every gate of `circuit` in order on a copy of `initial`.
pub fn run_circuit(circuit: &Circuit, initial: &StateVector) -> Result<StateVector> {
    let mut out = initial.clone();
    circuit.apply_to(&mut out)?;
    Ok(out)
}

pub fn marginal_probabilities(state: &StateVector, qubits: &[usize]) -> Result<Vec<f64>> {
    state.marginal_probabilities(qubits)
}

pub fn all_zero_probability(state: &StateVector, trash_qubits: &[usize]) -> Result<f64> {
    state.all_zero_probability(trash_qubits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn assert_amps(state: &StateVector, expected: &[(f64, f64)]) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (a, &(re, im)) in state.amplitudes().iter().zip(expected) {
            assert!((a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12, "{a} vs {re}+{im}i");
        }
    }

    fn bell() -> StateVector {
        let c = Circuit::from_gates(2, vec![Gate::ry(0, PI / 2.0), Gate::cx(0, 1)]).unwrap();
        run_circuit(&c, &StateVector::zero(2).unwrap()).unwrap()
    }

    #[test]
    fn ry_pi_flips_zero_to_one() {
        let s = apply_gate(&StateVector::zero(1).unwrap(), &Gate::ry(0, PI)).unwrap();
        assert_amps(&s, &[(0.0, 0.0), (1.0, 0.0)]);
    }

    #[test]
    fn ry_half_pi_gives_plus_state() {
        let s = apply_gate(&StateVector::zero(1).unwrap(), &Gate::ry(0, PI / 2.0)).unwrap();
        assert_amps(&s, &[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
    }

    #[test]
    fn cx_permutes_basis_states() {
        // |q1=0, q0=1⟩ is index 1; CX(0->1) sends it to |q1=1, q0=1⟩ = index 3.
        let s = StateVector::basis(2, 1).unwrap();
        let out = apply_gate(&s, &Gate::cx(0, 1)).unwrap();
        assert_eq!(out, StateVector::basis(2, 3).unwrap());
        // control 0 leaves the state alone
        let s = StateVector::basis(2, 2).unwrap();
        assert_eq!(apply_gate(&s, &Gate::cx(0, 1)).unwrap(), s);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let s = apply_gate(&StateVector::zero(3).unwrap(), &Gate::ry(1, 0.3)).unwrap();
        let out = run_circuit(&Circuit::new(3).unwrap(), &s).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn bell_construction() {
        let s = bell();
        assert_amps(
            &s,
            &[(FRAC_1_SQRT_2, 0.0), (0.0, 0.0), (0.0, 0.0), (FRAC_1_SQRT_2, 0.0)],
        );
    }

    #[test]
    fn bell_marginals() {
        let s = bell();
        let m = s.marginal_probabilities(&[1]).unwrap();
        assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12);
        assert!((s.all_zero_probability(&[1]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_state_marginal() {
        // |q1=1⟩ ⊗ |q0=0⟩ is index 2.
        let s = StateVector::basis(2, 2).unwrap();
        let m = s.marginal_probabilities(&[1]).unwrap();
        assert_eq!(m, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_state_trash_probability_is_one() {
        let s = StateVector::zero(3).unwrap();
        assert_eq!(s.all_zero_probability(&[2]).unwrap(), 1.0);
    }

    #[test]
    fn marginal_outcome_bit_order_follows_subset_order() {
        // index 0b100: q2 = 1, others 0
        let s = StateVector::basis(3, 4).unwrap();
        assert_eq!(s.marginal_probabilities(&[2, 0]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(s.marginal_probabilities(&[0, 2]).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn invalid_indices_are_rejected() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(s.apply(&Gate::ry(2, 0.1)), Err(Error::Config(_))));
        assert!(matches!(s.apply(&Gate::cx(1, 1)), Err(Error::Config(_))));
        assert!(matches!(s.apply(&Gate::cx(0, 5)), Err(Error::Config(_))));
        assert!(s.marginal_probabilities(&[0, 0]).is_err());
        assert!(s.marginal_probabilities(&[3]).is_err());
        assert!(s.all_zero_probability(&[2]).is_err());
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(Gate::ry(4, 0.0)).is_err());
        assert!(run_circuit(&c, &StateVector::zero(3).unwrap()).is_err());
    }

    #[test]
    fn non_normalized_amplitudes_rejected() {
        let amps = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(StateVector::from_amplitudes(amps).is_err());
        assert!(StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn circuit_inverse_undoes_circuit() {
        let c = Circuit::from_gates(
            3,
            vec![Gate::ry(0, 0.7), Gate::cx(0, 2), Gate::ry(2, -1.3), Gate::cx(2, 1), Gate::ry(1, 2.2)],
        )
        .unwrap();
        let s0 = run_circuit(
            &Circuit::from_gates(3, vec![Gate::ry(0, 0.4), Gate::ry(1, 1.9)]).unwrap(),
            &StateVector::zero(3).unwrap(),
        )
        .unwrap();
        let back = run_circuit(&c.inverse(), &run_circuit(&c, &s0).unwrap()).unwrap();
        for (a, b) in back.amplitudes().iter().zip(s0.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
