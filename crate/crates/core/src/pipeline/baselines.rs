//! Reference kernels the pipeline is compared against.
//!
//! Random: 25 candidate circuits sampled like the pool, evaluated at random
//! parameters, mean accuracy reported. TEK: a fixed four-block ansatz (two
//! parameterized 1-qubit layers per block followed by a ring of 2-qubit
//! gates) trained with the same KTA ascent. RBFK: the classical RBF kernel
//! with `gamma = 1/p`.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;

use crate::circuit::{assign_embedding, generate_candidate, Circuit, GateOp, ParamSlot};
use crate::device::{CouplingCalibration, DeviceTopology, GateKind, Subgraph};
use crate::error::{Error, Result};
use crate::kernel::{
    cross_kernel, default_rbf_gamma, kernel_matrix, rbf_cross_kernel, rbf_kernel, svm_accuracy,
    svm_fit, train_kernel_params, LabelVector,
};
use crate::rng::derive_stream;

use super::{BaselineKind, BaselinesDoc, PipelineConfig, ProcessedDataset};

/// Number of kernels averaged by the Random baseline.
pub const RANDOM_BASELINE_KERNELS: usize = 25;

/// Fit an SVM on the quantum kernel at `params` and score the test split.
pub fn quantum_kernel_accuracy(
    circuit: &Circuit,
    params: &[f64],
    data: &ProcessedDataset,
    svm_c: f64,
) -> Result<f64> {
    let y_train = LabelVector::new(data.y_train.clone(), data.num_classes)?;
    let y_test = LabelVector::new(data.y_test.clone(), data.num_classes)?;
    let k_train = kernel_matrix(circuit, params, &data.x_train)?;
    let model = svm_fit(&k_train, &y_train, svm_c)?;
    let k_test = cross_kernel(circuit, params, &data.x_test, &data.x_train)?;
    svm_accuracy(&model, &k_test, &y_test)
}

/// Mean test accuracy of randomly sampled, untrained kernels.
pub fn random_baseline(
    cfg: &PipelineConfig,
    topology: &DeviceTopology,
    subgraph: &Arc<Subgraph>,
    data: &ProcessedDataset,
) -> Result<Vec<f64>> {
    let gates = cfg.effective_gates();
    let mut accuracies = Vec::with_capacity(RANDOM_BASELINE_KERNELS);
    for k in 0..RANDOM_BASELINE_KERNELS as u64 {
        let mut circuit = None;
        for attempt in 0..64 {
            let mut rng = derive_stream(cfg.master_seed, "baseline-random", k * 64 + attempt);
            let c = generate_candidate(subgraph, &topology.gate_set, gates, &mut rng)?;
            if c.parameterized_positions().len() >= cfg.feature_dims {
                circuit = Some(assign_embedding(&c, cfg.feature_dims, &mut rng)?);
                break;
            }
        }
        let circuit = circuit.ok_or_else(|| {
            Error::Infeasible("random baseline could not draw an embeddable circuit".into())
        })?;
        let mut prng = derive_stream(cfg.master_seed, "baseline-random-params", k);
        let params: Vec<f64> = (0..circuit.num_trainable)
            .map(|_| prng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        accuracies.push(quantum_kernel_accuracy(&circuit, &params, data, cfg.svm_c)?);
    }
    Ok(accuracies)
}

/// Fixed TEK ansatz: four blocks of two parameterized 1-qubit layers plus a
/// ring of 2-qubit gates over all qubits (logical topology, simulated
/// noiselessly like every kernel evaluation).
pub fn build_tek_circuit(
    n_qubits: usize,
    gate_set: &[GateKind],
    p_dims: usize,
    seed: u64,
) -> Result<Circuit> {
    if n_qubits < 2 {
        return Err(Error::Invariant("TEK needs at least 2 qubits".into()));
    }
    let two_qubit = gate_set
        .iter()
        .copied()
        .find(|g| g.is_two_qubit())
        .ok_or_else(|| Error::Invariant("gate set has no 2-qubit gate".into()))?;
    let param_kinds: Vec<GateKind> = gate_set
        .iter()
        .copied()
        .filter(|g| g.is_parameterized())
        .collect();
    if param_kinds.is_empty() {
        return Err(Error::Invariant("gate set has no parameterized gate".into()));
    }
    let layer_a = param_kinds[0];
    let layer_b = *param_kinds.get(1).unwrap_or(&param_kinds[0]);

    // ring edges, deduplicated for n = 2
    let mut ring: Vec<(usize, usize)> = (0..n_qubits)
        .map(|i| {
            let j = (i + 1) % n_qubits;
            (i.min(j), i.max(j))
        })
        .collect();
    ring.sort_unstable();
    ring.dedup();
    let edges: Vec<CouplingCalibration> = ring
        .iter()
        .map(|&(a, b)| CouplingCalibration {
            qubit_a: a,
            qubit_b: b,
            two_qubit_gate_error: 0.01,
            duration_ns: 300.0,
        })
        .collect();
    let subgraph = Arc::new(Subgraph::new(
        "tek-ring".into(),
        (0..n_qubits).collect(),
        edges,
    )?);

    let mut ops = Vec::new();
    let mut slot = 0usize;
    for _ in 0..4 {
        for kind in [layer_a, layer_b] {
            for q in 0..n_qubits {
                ops.push(GateOp {
                    kind,
                    qubits: vec![q],
                    slot: ParamSlot::Trainable { index: slot },
                });
                slot += 1;
            }
        }
        for &(a, b) in &ring {
            ops.push(GateOp {
                kind: two_qubit,
                qubits: vec![a, b],
                slot: ParamSlot::None,
            });
        }
    }
    let circuit = Circuit::new(subgraph, ops)?;
    if circuit.parameterized_positions().len() < p_dims {
        return Err(Error::Infeasible(format!(
            "TEK ansatz has {} parameterized gates, {p_dims} embedding dims required",
            circuit.parameterized_positions().len()
        )));
    }
    let mut rng = derive_stream(seed, "tek-embed", 0);
    assign_embedding(&circuit, p_dims, &mut rng)
}

/// Train and score the TEK baseline.
pub fn tek_baseline(
    cfg: &PipelineConfig,
    topology: &DeviceTopology,
    data: &ProcessedDataset,
) -> Result<f64> {
    let circuit = build_tek_circuit(
        cfg.n_qubits,
        &topology.gate_set,
        cfg.feature_dims,
        cfg.master_seed,
    )?;
    let y_train = LabelVector::new(data.y_train.clone(), data.num_classes)?;
    let outcome = train_kernel_params(
        &circuit,
        &data.x_train,
        &y_train,
        cfg.final_steps,
        cfg.final_lr,
        derive_stream(cfg.master_seed, "tek-init", 0).random(),
    )?;
    quantum_kernel_accuracy(&circuit, &outcome.params, data, cfg.svm_c)
}

/// Classical RBF kernel baseline with `gamma = 1/p`.
pub fn rbfk_baseline(data: &ProcessedDataset, svm_c: f64) -> Result<f64> {
    rbfk_accuracy(
        &data.x_train,
        &data.y_train,
        &data.x_test,
        &data.y_test,
        data.num_classes,
        svm_c,
    )
}

pub fn rbfk_accuracy(
    x_train: &Array2<f64>,
    y_train: &[usize],
    x_test: &Array2<f64>,
    y_test: &[usize],
    num_classes: usize,
    svm_c: f64,
) -> Result<f64> {
    let gamma = default_rbf_gamma(x_train.ncols());
    let y_train = LabelVector::new(y_train.to_vec(), num_classes)?;
    let y_test = LabelVector::new(y_test.to_vec(), num_classes)?;
    let k_train = rbf_kernel(x_train, gamma)?;
    let model = svm_fit(&k_train, &y_train, svm_c)?;
    let k_test = rbf_cross_kernel(x_test, x_train, gamma)?;
    svm_accuracy(&model, &k_test, &y_test)
}

/// Evaluate the requested baselines.
pub fn run_baselines(
    cfg: &PipelineConfig,
    topology: &DeviceTopology,
    subgraph: &Arc<Subgraph>,
    data: &ProcessedDataset,
    which: &[BaselineKind],
) -> Result<BaselinesDoc> {
    let mut doc = BaselinesDoc::default();
    for kind in which {
        match kind {
            BaselineKind::Random => {
                let runs = random_baseline(cfg, topology, subgraph, data)?;
                doc.random_mean = Some(runs.iter().sum::<f64>() / runs.len() as f64);
                doc.random_runs = runs;
            }
            BaselineKind::Tek => {
                doc.tek = Some(tek_baseline(cfg, topology, data)?);
            }
            BaselineKind::Rbfk => {
                doc.rbfk = Some(rbfk_baseline(data, cfg.svm_c)?);
            }
        }
    }
    Ok(doc)
}
