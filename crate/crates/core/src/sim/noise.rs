//! Calibration-derived noise model.
//!
//! The decomposition is fixed so labels are reproducible from the
//! calibration document alone: each gate error becomes a depolarizing
//! channel with that parameter, T1/T2 become thermal relaxation applied for
//! the gate's duration, and readout errors become symmetric per-qubit
//! confusion matrices.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::device::{DeviceTopology, GateKind, Subgraph};
use crate::error::{Error, Result};

/// Gate/measurement durations used when the calibration lacks them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Durations {
    pub one_qubit_ns: f64,
    pub two_qubit_ns: f64,
    pub measure_ns: f64,
}

impl Default for Durations {
    fn default() -> Self {
        Durations {
            one_qubit_ns: 35.0,
            two_qubit_ns: 300.0,
            measure_ns: 1000.0,
        }
    }
}

/// Per-qubit relaxation and readout figures (times in nanoseconds).
#[derive(Debug, Clone, Copy)]
pub struct QubitNoise {
    pub t1_ns: f64,
    pub t2_ns: f64,
    pub readout_error: f64,
}

impl QubitNoise {
    pub fn noiseless() -> Self {
        QubitNoise {
            t1_ns: f64::INFINITY,
            t2_ns: f64::INFINITY,
            readout_error: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeNoise {
    pub depolarizing: f64,
    pub duration_ns: f64,
}

/// Noise channels for one subgraph, indexed by local qubit.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub qubits: Vec<QubitNoise>,
    /// Depolarizing parameter per (local qubit, 1-qubit gate).
    pub gate_depolarizing: Vec<BTreeMap<GateKind, f64>>,
    /// Depolarizing parameter and duration per local edge (smaller id first).
    pub edges: BTreeMap<(usize, usize), EdgeNoise>,
    pub durations: Durations,
}

impl NoiseModel {
    /// All channels disabled.
    pub fn noiseless(n: usize) -> Self {
        NoiseModel {
            qubits: vec![QubitNoise::noiseless(); n],
            gate_depolarizing: vec![BTreeMap::new(); n],
            edges: BTreeMap::new(),
            durations: Durations::default(),
        }
    }

    /// Derive channels from device calibration restricted to a subgraph.
    pub fn from_calibration(
        topology: &DeviceTopology,
        subgraph: &Subgraph,
        durations: Durations,
    ) -> Result<Self> {
        let n = subgraph.len();
        let mut qubits = Vec::with_capacity(n);
        let mut gate_depolarizing = Vec::with_capacity(n);
        for &device_id in &subgraph.qubit_ids {
            let cal = topology.qubit(device_id)?;
            qubits.push(QubitNoise {
                t1_ns: cal.t1_us * 1000.0,
                t2_ns: cal.t2_us * 1000.0,
                readout_error: cal.readout_error,
            });
            gate_depolarizing.push(cal.gate_errors.clone());
        }
        let mut edges = BTreeMap::new();
        for ((a, b), edge) in subgraph.local_edges().iter().zip(&subgraph.edges) {
            edges.insert(
                (*a, *b),
                EdgeNoise {
                    depolarizing: edge.two_qubit_gate_error,
                    duration_ns: edge.duration_ns,
                },
            );
        }
        let model = NoiseModel {
            qubits,
            gate_depolarizing,
            edges,
            durations,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (q, maps) in self.gate_depolarizing.iter().enumerate() {
            for (gate, p) in maps {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Invariant(format!(
                        "depolarizing parameter {p} for {gate} on qubit {q} outside [0,1]"
                    )));
                }
            }
        }
        for (pair, e) in &self.edges {
            if !(0.0..=1.0).contains(&e.depolarizing) {
                return Err(Error::Invariant(format!(
                    "depolarizing parameter {} on edge {pair:?} outside [0,1]",
                    e.depolarizing
                )));
            }
        }
        for (q, qn) in self.qubits.iter().enumerate() {
            if !(0.0..=1.0).contains(&qn.readout_error) {
                return Err(Error::Invariant(format!(
                    "readout error {} on qubit {q} outside [0,1]",
                    qn.readout_error
                )));
            }
            if !(qn.t1_ns > 0.0) || !(qn.t2_ns > 0.0) {
                return Err(Error::Invariant(format!("non-positive T1/T2 on qubit {q}")));
            }
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Depolarizing parameter of a 1-qubit gate on a local qubit.
    pub fn one_qubit_depolarizing(&self, q: usize, kind: GateKind) -> f64 {
        self.gate_depolarizing
            .get(q)
            .and_then(|m| m.get(&kind))
            .copied()
            .unwrap_or(0.0)
    }

    /// Depolarizing parameter and duration of a 2-qubit gate on a local pair.
    pub fn edge_noise(&self, a: usize, b: usize) -> EdgeNoise {
        let key = (a.min(b), a.max(b));
        self.edges.get(&key).copied().unwrap_or(EdgeNoise {
            depolarizing: 0.0,
            duration_ns: self.durations.two_qubit_ns,
        })
    }
}

/// Amplitude-damping + pure-dephasing parameters for one relaxation step.
///
/// `gamma = 1 - exp(-t/T1)`; the phase-flip probability is chosen so the
/// combined off-diagonal decay equals `exp(-t/T2)` (clamped to zero when the
/// calibration reports T2 > 2 T1).
pub fn relaxation_params(duration_ns: f64, t1_ns: f64, t2_ns: f64) -> (f64, f64) {
    if !t1_ns.is_finite() && !t2_ns.is_finite() {
        return (0.0, 0.0);
    }
    let gamma = if t1_ns.is_finite() {
        1.0 - (-duration_ns / t1_ns).exp()
    } else {
        0.0
    };
    let inv_tphi = if t2_ns.is_finite() {
        let inv_t1 = if t1_ns.is_finite() { 1.0 / t1_ns } else { 0.0 };
        (1.0 / t2_ns - 0.5 * inv_t1).max(0.0)
    } else {
        0.0
    };
    let pz = 0.5 * (1.0 - (-duration_ns * inv_tphi).exp());
    (gamma, pz)
}

/// Kraus operators of the 1-qubit channels, for verification.
pub fn depolarizing_kraus(p: f64) -> Vec<[[Complex64; 2]; 2]> {
    let z = Complex64::ZERO;
    let s0 = Complex64::new((1.0 - 0.75 * p).sqrt(), 0.0);
    let s = Complex64::new((0.25 * p).sqrt(), 0.0);
    vec![
        [[s0, z], [z, s0]],
        [[z, s], [s, z]],
        [[z, -s * Complex64::I], [s * Complex64::I, z]],
        [[s, z], [z, -s]],
    ]
}

pub fn amplitude_damping_kraus(gamma: f64) -> Vec<[[Complex64; 2]; 2]> {
    let z = Complex64::ZERO;
    vec![
        [
            [Complex64::ONE, z],
            [z, Complex64::new((1.0 - gamma).sqrt(), 0.0)],
        ],
        [[z, Complex64::new(gamma.sqrt(), 0.0)], [z, z]],
    ]
}

pub fn dephasing_kraus(pz: f64) -> Vec<[[Complex64; 2]; 2]> {
    let z = Complex64::ZERO;
    let a = Complex64::new((1.0 - pz).sqrt(), 0.0);
    let b = Complex64::new(pz.sqrt(), 0.0);
    vec![[[a, z], [z, a]], [[b, z], [z, -b]]]
}
