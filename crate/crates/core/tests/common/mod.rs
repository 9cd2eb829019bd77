//! Test-side oracles that share no code with the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ry_2x2(theta: f64) -> CMat {
    let (s, co) = (theta / 2.0).sin_cos();
    CMat::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)])
}

fn kron_chain(n: usize, target: usize, single: &CMat) -> CMat {
    // Little endian: qubit 0 is the rightmost Kronecker factor.
    let mut m = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let f = if q == target {
            single.clone()
        } else {
            CMat::identity(2, 2)
        };
        m = m.kronecker(&f);
    }
    m
}

/// Dense unitary for RY(theta) on `target` of an `n`-qubit register.
pub fn dense_ry(n: usize, target: usize, theta: f64) -> CMat {
    kron_chain(n, target, &ry_2x2(theta))
}

/// Dense CX built from projectors: |0><0|_c ⊗ I + |1><1|_c ⊗ X_t.
pub fn dense_cx(n: usize, control: usize, target: usize) -> CMat {
    let p0 = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
    let p1 = CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
    let x = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let mut a = CMat::identity(1, 1);
    let mut b = CMat::identity(1, 1);
    for q in (0..n).rev() {
        let (fa, fb) = if q == control {
            (p0.clone(), p1.clone())
        } else if q == target {
            (CMat::identity(2, 2), x.clone())
        } else {
            (CMat::identity(2, 2), CMat::identity(2, 2))
        };
        a = a.kronecker(&fa);
        b = b.kronecker(&fb);
    }
    a + b
}

#[derive(Clone, Copy, Debug)]
pub enum OracleGate {
    Ry(usize, f64),
    Cx(usize, usize),
}

pub fn dense_circuit(n: usize, gates: &[OracleGate]) -> CMat {
    let dim = 1 << n;
    gates.iter().fold(CMat::identity(dim, dim), |acc, g| {
        let m = match *g {
            OracleGate::Ry(t, th) => dense_ry(n, t, th),
            OracleGate::Cx(ctl, t) => dense_cx(n, ctl, t),
        };
        m * acc
    })
}

/// Applies each dense gate matrix to `state` in turn.
pub fn dense_apply(n: usize, gates: &[OracleGate], state: DVector<Complex64>) -> DVector<Complex64> {
    gates.iter().fold(state, |psi, g| match *g {
        OracleGate::Ry(t, th) => dense_ry(n, t, th) * psi,
        OracleGate::Cx(ctl, t) => dense_cx(n, ctl, t) * psi,
    })
}

pub fn zero_state(n: usize) -> DVector<Complex64> {
    let mut v = DVector::from_element(1 << n, c(0.0));
    v[0] = c(1.0);
    v
}

/// Probability of outcome `bits` on `qubits`, summing over every basis state.
pub fn enumerate_marginal(amps: &[Complex64], qubits: &[usize], bits: usize) -> f64 {
    amps.iter()
        .enumerate()
        .filter(|(idx, _)| {
            qubits
                .iter()
                .enumerate()
                .all(|(pos, &q)| ((idx >> q) & 1) == ((bits >> pos) & 1))
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// RealAmplitudes (linear chain) gate list in the oracle's own vocabulary.
pub fn oracle_real_amplitudes(n: usize, reps: usize, params: &[f64]) -> Vec<OracleGate> {
    let mut out = Vec::new();
    let mut k = 0;
    for layer in 0..=reps {
        for q in 0..n {
            out.push(OracleGate::Ry(q, params[k]));
            k += 1;
        }
        if layer < reps {
            for q in 0..n - 1 {
                out.push(OracleGate::Cx(q, q + 1));
            }
        }
    }
    out
}

/// Trash-all-zero probability computed entirely with dense matrices.
pub fn oracle_fidelity(n: usize, k: usize, reps: usize, params: &[f64], sample: &[f64], scale: f64) -> f64 {
    let mut gates: Vec<OracleGate> = sample
        .iter()
        .enumerate()
        .map(|(q, x)| OracleGate::Ry(q, scale * x))
        .collect();
    gates.extend(oracle_real_amplitudes(n, reps, params));
    let psi = dense_apply(n, &gates, zero_state(n));
    let trash: Vec<usize> = (n - k..n).collect();
    enumerate_marginal(psi.as_slice(), &trash, 0)
}
