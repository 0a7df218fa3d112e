//! Statevector and density-matrix simulation.
//!
//! Pure states drive kernel evaluation (noiseless fast path); density
//! matrices with calibration-derived noise channels drive PST fidelity
//! labeling. Qubit index 0 is the least significant bit of the amplitude
//! index, so outcome `|0...0>` is always index 0.

mod density;
mod noise;

pub use density::{
    measure_distribution, pst, pst_sampled, pst_with_limit, run_density, run_density_with_limit,
    zero_state_probability, DensityMatrix,
};
pub use noise::{
    amplitude_damping_kraus, dephasing_kraus, depolarizing_kraus, relaxation_params, Durations,
    NoiseModel, QubitNoise,
};

use num_complex::Complex64;

use crate::circuit::{BoundCircuit, BoundGate};
use crate::device::GateKind;
use crate::error::{Error, Result};

/// Default statevector qubit limit.
pub const MAX_STATEVECTOR_QUBITS: usize = 12;
/// Default density-matrix qubit limit.
pub const MAX_DENSITY_QUBITS: usize = 8;

/// A pure state over `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[0] = Complex64::ONE;
        StateVector { n, amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "overlap of {}- and {}-qubit states",
                self.n, other.n
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// 2x2 unitary of a 1-qubit gate (`angle` ignored for I and X).
pub fn gate_unitary_1q(kind: GateKind, angle: f64) -> [[Complex64; 2]; 2] {
    let z = Complex64::ZERO;
    let o = Complex64::ONE;
    match kind {
        GateKind::I => [[o, z], [z, o]],
        GateKind::X => [[z, o], [o, z]],
        GateKind::Rx => {
            let half = angle / 2.0;
            let c = Complex64::new(half.cos(), 0.0);
            let ms = Complex64::new(0.0, -half.sin());
            [[c, ms], [ms, c]]
        }
        GateKind::Rz => {
            let half = angle / 2.0;
            [
                [Complex64::from_polar(1.0, -half), z],
                [z, Complex64::from_polar(1.0, half)],
            ]
        }
        other => panic!("{other} is not a 1-qubit unitary"),
    }
}

/// 4x4 unitary of a 2-qubit gate in the `|control target>` basis.
pub fn gate_unitary_2q(kind: GateKind) -> [[Complex64; 4]; 4] {
    let z = Complex64::ZERO;
    let o = Complex64::ONE;
    match kind {
        GateKind::Cnot => [
            [o, z, z, z],
            [z, o, z, z],
            [z, z, z, o],
            [z, z, o, z],
        ],
        GateKind::Cz => [
            [o, z, z, z],
            [z, o, z, z],
            [z, z, o, z],
            [z, z, z, -o],
        ],
        other => panic!("{other} is not a 2-qubit unitary"),
    }
}

fn apply_1q(amps: &mut [Complex64], q: usize, m: &[[Complex64; 2]; 2]) {
    let mask = 1usize << q;
    for i in 0..amps.len() {
        if i & mask == 0 {
            let a = amps[i];
            let b = amps[i | mask];
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[i | mask] = m[1][0] * a + m[1][1] * b;
        }
    }
}

fn apply_rz(amps: &mut [Complex64], q: usize, angle: f64) {
    let mask = 1usize << q;
    let lo = Complex64::from_polar(1.0, -angle / 2.0);
    let hi = Complex64::from_polar(1.0, angle / 2.0);
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i & mask == 0 { lo } else { hi };
    }
}

fn apply_x(amps: &mut [Complex64], q: usize) {
    let mask = 1usize << q;
    for i in 0..amps.len() {
        if i & mask == 0 {
            amps.swap(i, i | mask);
        }
    }
}

fn apply_cz(amps: &mut [Complex64], a: usize, b: usize) {
    let mask = (1usize << a) | (1usize << b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) {
    let cmask = 1usize << control;
    let tmask = 1usize << target;
    for i in 0..amps.len() {
        if i & cmask != 0 && i & tmask == 0 {
            amps.swap(i, i | tmask);
        }
    }
}

pub(crate) fn apply_gate_statevector(amps: &mut [Complex64], op: &BoundGate) -> Result<()> {
    match op.kind {
        GateKind::I => {}
        GateKind::X => apply_x(amps, op.qubits[0]),
        GateKind::Rx => {
            let angle = required_angle(op)?;
            apply_1q(amps, op.qubits[0], &gate_unitary_1q(GateKind::Rx, angle));
        }
        GateKind::Rz => apply_rz(amps, op.qubits[0], required_angle(op)?),
        GateKind::Cz => apply_cz(amps, op.qubits[0], op.qubits[1]),
        GateKind::Cnot => apply_cnot(amps, op.qubits[0], op.qubits[1]),
        pseudo => {
            return Err(Error::Invariant(format!(
                "cannot simulate pseudo-op {pseudo}"
            )))
        }
    }
    Ok(())
}

pub(crate) fn required_angle(op: &BoundGate) -> Result<f64> {
    op.angle.ok_or_else(|| {
        Error::Invariant(format!("parameterized gate {} has no bound angle", op.kind))
    })
}

/// Apply the circuit to `|0...0>` under the default qubit limit.
pub fn run_statevector(bound: &BoundCircuit) -> Result<StateVector> {
    run_statevector_with_limit(bound, MAX_STATEVECTOR_QUBITS)
}

/// Apply the circuit to `|0...0>`; I gates compile to no-ops.
pub fn run_statevector_with_limit(bound: &BoundCircuit, max_qubits: usize) -> Result<StateVector> {
    if bound.local_qubits > max_qubits {
        return Err(Error::SimLimit(format!(
            "{} qubits exceeds the statevector limit {}",
            bound.local_qubits, max_qubits
        )));
    }
    let mut state = StateVector::zero(bound.local_qubits);
    for op in &bound.ops {
        apply_gate_statevector(&mut state.amps, op)?;
    }
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "statevector norm drifted to {norm}"
        )));
    }
    Ok(state)
}

/// Kernel entry between two pure states: `|<psi_i|psi_j>|^2`.
pub fn kernel_entry(state_i: &StateVector, state_j: &StateVector) -> Result<f64> {
    Ok(state_i.overlap(state_j)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::BoundGate;
    use std::f64::consts::PI;

    fn bound(n: usize, ops: Vec<BoundGate>) -> BoundCircuit {
        BoundCircuit {
            local_qubits: n,
            ops,
        }
    }

    fn g(kind: GateKind, qubits: &[usize], angle: Option<f64>) -> BoundGate {
        BoundGate {
            kind,
            qubits: qubits.to_vec(),
            angle,
        }
    }

    #[test]
    fn empty_circuit_is_ground_state() {
        let sv = run_statevector(&bound(3, vec![])).unwrap();
        assert_eq!(sv.amps[0], Complex64::ONE);
        assert!(sv.amps[1..].iter().all(|a| *a == Complex64::ZERO));
    }

    #[test]
    fn rx_pi_gives_minus_i_one() {
        let sv = run_statevector(&bound(1, vec![g(GateKind::Rx, &[0], Some(PI))])).unwrap();
        assert!((sv.amps[0] - Complex64::ZERO).norm() < 1e-12);
        assert!((sv.amps[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn cz_flips_phase_of_11() {
        let sv = run_statevector(&bound(
            2,
            vec![
                g(GateKind::X, &[0], None),
                g(GateKind::X, &[1], None),
                g(GateKind::Cz, &[0, 1], None),
            ],
        ))
        .unwrap();
        assert!((sv.amps[3] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cnot_matches_matrix() {
        // |10> in (control=q1, target=q0) ordering: set control qubit 1
        let sv = run_statevector(&bound(
            2,
            vec![g(GateKind::X, &[1], None), g(GateKind::Cnot, &[1, 0], None)],
        ))
        .unwrap();
        // control=1: target flipped -> |11> = index 3
        assert!((sv.amps[3] - Complex64::ONE).norm() < 1e-12);
    }

    #[test]
    fn unitarity_of_gate_matrices() {
        for kind in [GateKind::I, GateKind::X, GateKind::Rx, GateKind::Rz] {
            for k in 0..16 {
                let angle = k as f64 * PI / 8.0;
                let m = gate_unitary_1q(kind, angle);
                for i in 0..2 {
                    for j in 0..2 {
                        let mut s = Complex64::ZERO;
                        for l in 0..2 {
                            s += m[l][i].conj() * m[l][j];
                        }
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((s - expect).norm() <= 1e-12);
                    }
                }
            }
        }
        for kind in [GateKind::Cz, GateKind::Cnot] {
            let m = gate_unitary_2q(kind);
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = Complex64::ZERO;
                    for l in 0..4 {
                        s += m[l][i].conj() * m[l][j];
                    }
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((s - expect).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_rotations_at_zero_angle() {
        let sv = run_statevector(&bound(
            2,
            vec![
                g(GateKind::Rx, &[0], Some(0.0)),
                g(GateKind::Rz, &[1], Some(0.0)),
            ],
        ))
        .unwrap();
        assert!((sv.amps[0] - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn kernel_entry_examples() {
        let zero = StateVector::zero(1);
        let one = run_statevector(&bound(1, vec![g(GateKind::X, &[0], None)])).unwrap();
        let plusish = run_statevector(&bound(1, vec![g(GateKind::Rx, &[0], Some(PI / 2.0))])).unwrap();
        assert!((kernel_entry(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(kernel_entry(&zero, &one).unwrap().abs() < 1e-12);
        assert!((kernel_entry(&zero, &plusish).unwrap() - 0.5).abs() < 1e-12);
        let two = StateVector::zero(2);
        assert!(kernel_entry(&zero, &two).is_err());
    }

    #[test]
    fn qubit_limit_enforced() {
        let c = bound(13, vec![]);
        assert!(matches!(run_statevector(&c), Err(Error::SimLimit(_))));
        assert!(run_statevector_with_limit(&bound(4, vec![]), 4).is_ok());
    }

    #[test]
    fn statevector_against_dense_matrix_oracle() {
        // independent oracle: build the full unitary by Kronecker products
        // and multiply it into the state
        use crate::rng::rng_from_seed;
        use rand::Rng;

        fn kron(a: &Vec<Vec<Complex64>>, b: &Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
            let (ra, ca) = (a.len(), a[0].len());
            let (rb, cb) = (b.len(), b[0].len());
            let mut out = vec![vec![Complex64::ZERO; ca * cb]; ra * rb];
            for i in 0..ra {
                for j in 0..ca {
                    for k in 0..rb {
                        for l in 0..cb {
                            out[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
                        }
                    }
                }
            }
            out
        }

        let mut rng = rng_from_seed(31);
        for _ in 0..10 {
            let n = 3usize;
            let dim = 1 << n;
            let mut ops = Vec::new();
            for _ in 0..12 {
                match rng.random_range(0..4) {
                    0 => ops.push(g(GateKind::Rx, &[rng.random_range(0..n)], Some(rng.random_range(0.0..6.28)))),
                    1 => ops.push(g(GateKind::Rz, &[rng.random_range(0..n)], Some(rng.random_range(0.0..6.28)))),
                    2 => ops.push(g(GateKind::X, &[rng.random_range(0..n)], None)),
                    _ => {
                        let a = rng.random_range(0..n);
                        let b = (a + 1 + rng.random_range(0..n - 1)) % n;
                        ops.push(g(GateKind::Cz, &[a, b], None));
                    }
                }
            }
            let sv = run_statevector(&bound(n, ops.clone())).unwrap();

            // oracle
            let mut state = vec![Complex64::ZERO; dim];
            state[0] = Complex64::ONE;
            for op in &ops {
                // build dim x dim matrix for this op
                let full = if op.kind.is_two_qubit() {
                    // expand CZ as diagonal sign matrix
                    let mask = (1 << op.qubits[0]) | (1 << op.qubits[1]);
                    let mut m = vec![vec![Complex64::ZERO; dim]; dim];
                    for i in 0..dim {
                        m[i][i] = if i & mask == mask {
                            -Complex64::ONE
                        } else {
                            Complex64::ONE
                        };
                    }
                    m
                } else {
                    let u = gate_unitary_1q(op.kind, op.angle.unwrap_or(0.0));
                    let u: Vec<Vec<Complex64>> =
                        vec![vec![u[0][0], u[0][1]], vec![u[1][0], u[1][1]]];
                    let eye: Vec<Vec<Complex64>> = vec![
                        vec![Complex64::ONE, Complex64::ZERO],
                        vec![Complex64::ZERO, Complex64::ONE],
                    ];
                    // qubit 0 is least significant: factor order is q_{n-1} ⊗ ... ⊗ q_0
                    let mut m = if op.qubits[0] == n - 1 { u.clone() } else { eye.clone() };
                    for q in (0..n - 1).rev() {
                        let f = if q == op.qubits[0] { &u } else { &eye };
                        m = kron(&m, f);
                    }
                    m
                };
                let mut next = vec![Complex64::ZERO; dim];
                for (r, row) in full.iter().enumerate() {
                    for (c, val) in row.iter().enumerate() {
                        next[r] += *val * state[c];
                    }
                }
                state = next;
            }
            for i in 0..dim {
                assert!((sv.amps[i] - state[i]).norm() < 1e-10);
            }
        }
    }
}
