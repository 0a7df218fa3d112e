//! Density-matrix simulation with noise channels.
//!
//! Per gate: unitary conjugation, then a depolarizing channel on the gate's
//! qubit(s), then thermal relaxation on the same qubit(s) for the gate
//! duration. PST concatenates a circuit with its inverse, simulates the
//! noisy density matrix, applies measurement-duration relaxation and readout
//! confusion, and reads off the `|0...0>` probability exactly.

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{inverse, BoundCircuit, BoundGate};
use crate::device::GateKind;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

use super::noise::{relaxation_params, NoiseModel};
use super::{gate_unitary_1q, required_angle, MAX_DENSITY_QUBITS};

/// A mixed state over `n` qubits, row-major `2^n x 2^n`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub n: usize,
    pub dim: usize,
    pub entries: Vec<Complex64>,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn ground(n: usize) -> Self {
        let dim = 1 << n;
        let mut entries = vec![Complex64::ZERO; dim * dim];
        entries[0] = Complex64::ONE;
        DensityMatrix { n, dim, entries }
    }

    /// Projector onto a pure state.
    pub fn from_pure(state: &super::StateVector) -> Self {
        let dim = state.amps.len();
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[r * dim + c] = state.amps[r] * state.amps[c].conj();
            }
        }
        DensityMatrix {
            n: state.n,
            dim,
            entries,
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.dim + c]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    /// `max_{r,c} |rho[r][c] - conj(rho[c][r])|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max((self.at(r, c) - self.at(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue, via the real symmetric embedding
    /// `[[Re, -Im], [Im, Re]]` whose spectrum doubles the Hermitian one.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim;
        let mut emb = ndarray::Array2::<f64>::zeros((2 * d, 2 * d));
        for r in 0..d {
            for c in 0..d {
                let v = self.at(r, c);
                emb[[r, c]] = v.re;
                emb[[r + d, c + d]] = v.re;
                emb[[r, c + d]] = -v.im;
                emb[[r + d, c]] = v.im;
            }
        }
        crate::linalg::min_eigenvalue(&emb)
    }

    /// `Tr(rho_a rho_b)`, real part (exact for Hermitian operands).
    pub fn trace_product(&self, other: &DensityMatrix) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "trace product of {}- and {}-qubit density matrices",
                self.n, other.n
            )));
        }
        let d = self.dim;
        let mut acc = 0.0;
        for r in 0..d {
            for c in 0..d {
                acc += (self.at(r, c) * other.at(c, r)).re;
            }
        }
        Ok(acc)
    }

    /// Diagonal as real probabilities.
    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.at(i, i).re).collect()
    }

    fn apply_unitary_1q(&mut self, q: usize, m: &[[Complex64; 2]; 2]) {
        let dim = self.dim;
        let mask = 1usize << q;
        // left: rho <- U rho
        for r0 in 0..dim {
            if r0 & mask != 0 {
                continue;
            }
            let r1 = r0 | mask;
            for c in 0..dim {
                let a = self.entries[r0 * dim + c];
                let b = self.entries[r1 * dim + c];
                self.entries[r0 * dim + c] = m[0][0] * a + m[0][1] * b;
                self.entries[r1 * dim + c] = m[1][0] * a + m[1][1] * b;
            }
        }
        // right: rho <- rho U^dag
        for r in 0..dim {
            let base = r * dim;
            for c0 in 0..dim {
                if c0 & mask != 0 {
                    continue;
                }
                let c1 = c0 | mask;
                let a = self.entries[base + c0];
                let b = self.entries[base + c1];
                self.entries[base + c0] = a * m[0][0].conj() + b * m[0][1].conj();
                self.entries[base + c1] = a * m[1][0].conj() + b * m[1][1].conj();
            }
        }
    }

    fn apply_rz(&mut self, q: usize, angle: f64) {
        let mask = 1usize << q;
        let lo = Complex64::from_polar(1.0, -angle / 2.0);
        let hi = Complex64::from_polar(1.0, angle / 2.0);
        let dim = self.dim;
        for r in 0..dim {
            let pr = if r & mask == 0 { lo } else { hi };
            for c in 0..dim {
                let pc = if c & mask == 0 { lo } else { hi };
                self.entries[r * dim + c] *= pr * pc.conj();
            }
        }
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        let dim = self.dim;
        for r in 0..dim {
            let sr = r & mask == mask;
            for c in 0..dim {
                let sc = c & mask == mask;
                if sr != sc {
                    self.entries[r * dim + c] = -self.entries[r * dim + c];
                }
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        let dim = self.dim;
        // permute rows
        for r in 0..dim {
            if r & cmask != 0 && r & tmask == 0 {
                let r2 = r | tmask;
                for c in 0..dim {
                    self.entries.swap(r * dim + c, r2 * dim + c);
                }
            }
        }
        // permute columns
        for c in 0..dim {
            if c & cmask != 0 && c & tmask == 0 {
                let c2 = c | tmask;
                for r in 0..dim {
                    self.entries.swap(r * dim + c, r * dim + c2);
                }
            }
        }
    }

    /// Depolarizing with replacement parameter `p`:
    /// `rho -> (1-p) rho + p (I/2 (x) Tr_q rho)`.
    fn depolarize_1q(&mut self, q: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let mask = 1usize << q;
        let dim = self.dim;
        let keep = 1.0 - p;
        for r0 in 0..dim {
            if r0 & mask != 0 {
                continue;
            }
            let r1 = r0 | mask;
            for c0 in 0..dim {
                if c0 & mask != 0 {
                    continue;
                }
                let c1 = c0 | mask;
                let t = self.entries[r0 * dim + c0] + self.entries[r1 * dim + c1];
                let mixed = t * (0.5 * p);
                self.entries[r0 * dim + c0] = self.entries[r0 * dim + c0] * keep + mixed;
                self.entries[r1 * dim + c1] = self.entries[r1 * dim + c1] * keep + mixed;
                self.entries[r0 * dim + c1] *= keep;
                self.entries[r1 * dim + c0] *= keep;
            }
        }
    }

    /// 2-qubit depolarizing with replacement parameter `p`.
    fn depolarize_2q(&mut self, qa: usize, qb: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let ma = 1usize << qa;
        let mb = 1usize << qb;
        let pairmask = ma | mb;
        let dim = self.dim;
        let keep = 1.0 - p;
        let offsets = [0, ma, mb, ma | mb];
        for r0 in 0..dim {
            if r0 & pairmask != 0 {
                continue;
            }
            for c0 in 0..dim {
                if c0 & pairmask != 0 {
                    continue;
                }
                let mut t = Complex64::ZERO;
                for &o in &offsets {
                    t += self.entries[(r0 | o) * dim + (c0 | o)];
                }
                let mixed = t * (0.25 * p);
                for &or in &offsets {
                    for &oc in &offsets {
                        let idx = (r0 | or) * dim + (c0 | oc);
                        self.entries[idx] *= keep;
                        if or == oc {
                            self.entries[idx] += mixed;
                        }
                    }
                }
            }
        }
    }

    /// Amplitude damping (gamma) followed by pure dephasing (phase-flip pz).
    fn relax(&mut self, q: usize, gamma: f64, pz: f64) {
        if gamma == 0.0 && pz == 0.0 {
            return;
        }
        let mask = 1usize << q;
        let dim = self.dim;
        let s = (1.0 - gamma).sqrt();
        let offdiag = s * (1.0 - 2.0 * pz);
        for r0 in 0..dim {
            if r0 & mask != 0 {
                continue;
            }
            let r1 = r0 | mask;
            for c0 in 0..dim {
                if c0 & mask != 0 {
                    continue;
                }
                let c1 = c0 | mask;
                let d = self.entries[r1 * dim + c1];
                self.entries[r0 * dim + c0] += d * gamma;
                self.entries[r1 * dim + c1] = d * (1.0 - gamma);
                self.entries[r0 * dim + c1] *= offdiag;
                self.entries[r1 * dim + c0] *= offdiag;
            }
        }
    }

    fn apply_noisy_gate(&mut self, op: &BoundGate, noise: &NoiseModel) -> Result<()> {
        // I compiles to a no-op: no unitary, no channels.
        if op.kind == GateKind::I {
            return Ok(());
        }
        match op.kind {
            GateKind::X => self.apply_unitary_1q(op.qubits[0], &gate_unitary_1q(GateKind::X, 0.0)),
            GateKind::Rx => {
                let angle = required_angle(op)?;
                self.apply_unitary_1q(op.qubits[0], &gate_unitary_1q(GateKind::Rx, angle));
            }
            GateKind::Rz => self.apply_rz(op.qubits[0], required_angle(op)?),
            GateKind::Cz => self.apply_cz(op.qubits[0], op.qubits[1]),
            GateKind::Cnot => self.apply_cnot(op.qubits[0], op.qubits[1]),
            GateKind::I => unreachable!(),
            pseudo => {
                return Err(Error::Invariant(format!(
                    "cannot simulate pseudo-op {pseudo}"
                )))
            }
        }
        if op.kind.is_two_qubit() {
            let (a, b) = (op.qubits[0], op.qubits[1]);
            let edge = noise.edge_noise(a, b);
            self.depolarize_2q(a, b, edge.depolarizing);
            for &q in &op.qubits {
                let qn = noise.qubits[q];
                let (gamma, pz) = relaxation_params(edge.duration_ns, qn.t1_ns, qn.t2_ns);
                self.relax(q, gamma, pz);
            }
        } else {
            let q = op.qubits[0];
            self.depolarize_1q(q, noise.one_qubit_depolarizing(q, op.kind));
            let qn = noise.qubits[q];
            let (gamma, pz) = relaxation_params(noise.durations.one_qubit_ns, qn.t1_ns, qn.t2_ns);
            self.relax(q, gamma, pz);
        }
        Ok(())
    }
}

/// Noisy simulation under the default qubit limit.
pub fn run_density(bound: &BoundCircuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    run_density_with_limit(bound, noise, MAX_DENSITY_QUBITS)
}

/// Noisy simulation of a bound circuit from `|0...0><0...0|`.
pub fn run_density_with_limit(
    bound: &BoundCircuit,
    noise: &NoiseModel,
    max_qubits: usize,
) -> Result<DensityMatrix> {
    if bound.local_qubits > max_qubits {
        return Err(Error::SimLimit(format!(
            "{} qubits exceeds the density-matrix limit {}",
            bound.local_qubits, max_qubits
        )));
    }
    if noise.num_qubits() < bound.local_qubits {
        return Err(Error::Dimension(format!(
            "noise model covers {} qubits, circuit needs {}",
            noise.num_qubits(),
            bound.local_qubits
        )));
    }
    let mut rho = DensityMatrix::ground(bound.local_qubits);
    for op in &bound.ops {
        rho.apply_noisy_gate(op, noise)?;
    }
    Ok(rho)
}

/// Outcome distribution after readout confusion.
///
/// The diagonal of `rho` is pushed through the tensor product of per-qubit
/// confusion matrices `[[1-eps, eps], [eps, 1-eps]]`.
pub fn measure_distribution(rho: &DensityMatrix, noise: &NoiseModel) -> Vec<f64> {
    let mut p = rho.diagonal_probabilities();
    for q in 0..rho.n {
        let eps = noise.qubits.get(q).map_or(0.0, |qn| qn.readout_error);
        if eps == 0.0 {
            continue;
        }
        let mask = 1usize << q;
        for i in 0..p.len() {
            if i & mask == 0 {
                let a = p[i];
                let b = p[i | mask];
                p[i] = (1.0 - eps) * a + eps * b;
                p[i | mask] = eps * a + (1.0 - eps) * b;
            }
        }
    }
    p
}

/// Probability of measuring `|0...0>` after running circuit ∘ inverse under
/// noise, computed exactly from the output distribution (infinite-shot PST).
///
/// Thermal relaxation for the measurement duration is applied to every qubit
/// before readout confusion.
pub fn pst(bound: &BoundCircuit, noise: &NoiseModel) -> Result<f64> {
    pst_with_limit(bound, noise, MAX_DENSITY_QUBITS)
}

pub fn pst_with_limit(bound: &BoundCircuit, noise: &NoiseModel, max_qubits: usize) -> Result<f64> {
    let echo = bound.then(&inverse(bound))?;
    zero_state_probability(&echo, noise, max_qubits)
}

/// Probability of measuring `|0...0>` after a noisy run of `bound`:
/// density simulation, measurement-duration relaxation, readout confusion.
pub fn zero_state_probability(
    bound: &BoundCircuit,
    noise: &NoiseModel,
    max_qubits: usize,
) -> Result<f64> {
    let mut rho = run_density_with_limit(bound, noise, max_qubits)?;
    for q in 0..rho.n {
        let qn = noise.qubits[q];
        let (gamma, pz) = relaxation_params(noise.durations.measure_ns, qn.t1_ns, qn.t2_ns);
        rho.relax(q, gamma, pz);
    }
    let dist = measure_distribution(&rho, noise);
    Ok(dist[0])
}

/// Finite-shot PST estimate, for validating the exact computation.
pub fn pst_sampled(
    bound: &BoundCircuit,
    noise: &NoiseModel,
    shots: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let echo = bound.then(&inverse(bound))?;
    let mut rho = run_density(&echo, noise)?;
    for q in 0..rho.n {
        let qn = noise.qubits[q];
        let (gamma, pz) = relaxation_params(noise.durations.measure_ns, qn.t1_ns, qn.t2_ns);
        rho.relax(q, gamma, pz);
    }
    let dist = measure_distribution(&rho, noise);
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for p in &dist {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let total = *cdf.last().unwrap_or(&1.0);
    let mut zeros = 0usize;
    for _ in 0..shots {
        let u: f64 = rng.random_range(0.0..total);
        let outcome = cdf.iter().position(|&c| u < c).unwrap_or(dist.len() - 1);
        if outcome == 0 {
            zeros += 1;
        }
    }
    Ok(zeros as f64 / shots as f64)
}
