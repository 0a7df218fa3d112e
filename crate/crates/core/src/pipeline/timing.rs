//! Speedup harness: GNN inference vs direct metric calculation.
//!
//! Mirrors the runtime comparison methodology of surrogate-vs-direct
//! evaluation: the direct PST arm runs one noisy echo-circuit density
//! simulation per circuit, and the direct KTA arm evaluates every kernel
//! entry of the labeling subset as its own noisy overlap circuit (the way a
//! device would estimate it: run `U(x_j)` then `U(x_i)^dag` and read the
//! all-zeros frequency). The noiseless cached-state shortcut used for label
//! generation is also timed for reference.

use std::sync::Arc;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{bind, inverse, Circuit};
use crate::device::{default_exclusion_budget, DeviceTopology, NoiseType};
use crate::error::Result;
use crate::featurize::{build_graph, CircuitGraph, GraphMode, GraphNormalizer, DEFAULT_QUBIT_WIDTH};
use crate::gnn::SurrogateModel;
use crate::kernel::{kernel_matrix, kta, KernelMatrix, KernelSource, LabelVector};
use crate::rng::derive_stream;
use crate::sim::{pst, zero_state_probability, NoiseModel, MAX_DENSITY_QUBITS};

use super::generate_pool;

/// Harness parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeedupConfig {
    pub n_qubits: usize,
    pub circuits: usize,
    pub feature_dims: usize,
    pub classes: usize,
    pub kta_samples_per_class: usize,
    pub seed: u64,
}

impl Default for SpeedupConfig {
    fn default() -> Self {
        SpeedupConfig {
            n_qubits: 7,
            circuits: 100,
            feature_dims: 14,
            classes: 2,
            kta_samples_per_class: 10,
            seed: 0,
        }
    }
}

/// Mean per-circuit wall-clock of each evaluation route.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub circuits: usize,
    pub n_qubits: usize,
    pub gnn_mean_s: f64,
    pub pst_direct_mean_s: f64,
    /// Per-entry noisy overlap-circuit evaluation of the subset kernel.
    pub kta_direct_mean_s: f64,
    /// Noiseless cached-state kernel (the labeling fast path), for reference.
    pub kta_cached_mean_s: f64,
    pub pst_speedup: f64,
    pub kta_speedup: f64,
}

/// Measure GNN prediction vs direct PST/KTA calculation over a circuit pool.
pub fn speedup_harness(topology: &DeviceTopology, cfg: &SpeedupConfig) -> Result<SpeedupReport> {
    let e_xc = default_exclusion_budget(topology.num_qubits);
    let subgraph = Arc::new(crate::device::select_subgraph(
        topology,
        cfg.n_qubits,
        e_xc,
        &NoiseType::default_order(),
    )?);
    let gates = ((2.5 * cfg.feature_dims as f64).ceil() as usize).max(30);
    let pool = generate_pool(
        &subgraph,
        topology,
        cfg.circuits,
        gates,
        cfg.feature_dims,
        cfg.seed,
    )?;
    let noise = NoiseModel::from_calibration(topology, &subgraph, Default::default())?;

    // labeling subset: synthetic angles in [0, pi], labels round-robin
    let l = cfg.classes * cfg.kta_samples_per_class;
    let mut data_rng = derive_stream(cfg.seed, "speedup-data", 0);
    let subset = Array2::from_shape_fn((l, cfg.feature_dims), |_| {
        data_rng.random_range(0.0..std::f64::consts::PI)
    });
    let labels = LabelVector::new((0..l).map(|i| i % cfg.classes).collect(), cfg.classes)?;

    // prediction arm: normalized fidelity graphs through GNNs-1
    let graphs: Vec<CircuitGraph> = pool
        .iter()
        .map(|c| build_graph(c, topology, GraphMode::Fidelity, DEFAULT_QUBIT_WIDTH))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&CircuitGraph> = graphs.iter().collect();
    let normalizer = GraphNormalizer::fit(&refs)?;
    let normalized: Vec<CircuitGraph> = graphs
        .iter()
        .map(|g| normalizer.apply(g))
        .collect::<Result<Vec<_>>>()?;
    let model = SurrogateModel::new(DEFAULT_QUBIT_WIDTH, cfg.seed);
    let start = Instant::now();
    let mut sink = 0.0;
    for g in &normalized {
        sink += model.forward(g)?;
    }
    let gnn_mean_s = start.elapsed().as_secs_f64() / cfg.circuits as f64;
    std::hint::black_box(sink);

    // direct PST arm: one noisy echo simulation per circuit
    let bound_for = |circuit: &Circuit, id: u64| -> Result<crate::circuit::BoundCircuit> {
        let mut rng = derive_stream(cfg.seed, "speedup-angles", id);
        let embed: Vec<f64> = (0..circuit.embed_dims())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let params: Vec<f64> = (0..circuit.num_trainable)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        bind(circuit, &embed, &params)
    };
    let start = Instant::now();
    let mut sink = 0.0;
    for (id, circuit) in pool.iter().enumerate() {
        let bound = bound_for(circuit, id as u64)?;
        sink += pst(&bound, &noise)?;
    }
    let pst_direct_mean_s = start.elapsed().as_secs_f64() / cfg.circuits as f64;
    std::hint::black_box(sink);

    // direct KTA arm: every subset kernel entry as its own noisy overlap run
    let param_for = |circuit: &Circuit, id: u64| -> Vec<f64> {
        let mut rng = derive_stream(cfg.seed, "speedup-kta-params", id);
        (0..circuit.num_trainable)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect()
    };
    let start = Instant::now();
    let mut sink = 0.0;
    for (id, circuit) in pool.iter().enumerate() {
        let params = param_for(circuit, id as u64);
        let bound_rows: Vec<crate::circuit::BoundCircuit> = (0..l)
            .map(|i| bind(circuit, &subset.row(i).to_vec(), &params))
            .collect::<Result<Vec<_>>>()?;
        let mut entries = Array2::zeros((l, l));
        for i in 0..l {
            for j in i..l {
                let overlap_circuit = bound_rows[j].then(&inverse(&bound_rows[i]))?;
                let value = zero_state_probability(&overlap_circuit, &noise, MAX_DENSITY_QUBITS)?;
                entries[[i, j]] = value;
                entries[[j, i]] = value;
            }
        }
        let kernel = KernelMatrix {
            entries,
            source: KernelSource::Quantum {
                circuit_ref: id.to_string(),
                params: params.clone(),
            },
        };
        sink += kta(&kernel, &labels)?;
    }
    let kta_direct_mean_s = start.elapsed().as_secs_f64() / cfg.circuits as f64;
    std::hint::black_box(sink);

    // cached-state fast path, for reference
    let start = Instant::now();
    let mut sink = 0.0;
    for (id, circuit) in pool.iter().enumerate() {
        let params = param_for(circuit, id as u64);
        let kernel = kernel_matrix(circuit, &params, &subset)?;
        sink += kta(&kernel, &labels)?;
    }
    let kta_cached_mean_s = start.elapsed().as_secs_f64() / cfg.circuits as f64;
    std::hint::black_box(sink);

    Ok(SpeedupReport {
        circuits: cfg.circuits,
        n_qubits: cfg.n_qubits,
        gnn_mean_s,
        pst_direct_mean_s,
        kta_direct_mean_s,
        kta_cached_mean_s,
        pst_speedup: pst_direct_mean_s / gnn_mean_s,
        kta_speedup: kta_direct_mean_s / gnn_mean_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harness_runs_at_toy_scale() {
        let fixture = crate::device::fixtures::torino_like();
        let cfg = SpeedupConfig {
            n_qubits: 3,
            circuits: 2,
            feature_dims: 4,
            classes: 2,
            kta_samples_per_class: 2,
            seed: 1,
        };
        let report = speedup_harness(&fixture.topology, &cfg).unwrap();
        assert!(report.gnn_mean_s > 0.0);
        assert!(report.pst_direct_mean_s > 0.0);
        assert!(report.kta_direct_mean_s > report.kta_cached_mean_s);
    }
}
