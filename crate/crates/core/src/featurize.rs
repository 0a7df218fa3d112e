//! Circuit-to-graph conversion for the GNN surrogates.
//!
//! A circuit becomes a DAG with one node per input qubit, gate and
//! measurement; edges follow the temporal order along each qubit wire, so
//! every 2-qubit gate is a single node with in- and out-degree 2. Node
//! features pack, in order: normalized topological index (1), node-type
//! one-hot (6, registry `[input, measure, gate_set...]`), target-qubit
//! one-/two-hot (Q, default 16), embedding tag (1) and noise figures (7:
//! T1/T2 of both qubits, gate error, readout errors). Fidelity-mode graphs
//! carry calibration noise; performance-mode graphs zero-fill it and swap
//! the third global feature from depth to embedding count.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::circuit::{circuit_stats, Circuit, ParamSlot};
use crate::device::{DeviceTopology, GateKind};
use crate::error::{Error, Result};

/// Default target-qubit one-hot width.
pub const DEFAULT_QUBIT_WIDTH: usize = 16;
/// Feature slots besides the target-qubit block.
const FIXED_SLOTS: usize = 1 + 6 + 1 + 7;

/// Feature width for a given target-qubit block width.
pub fn feature_width(q_width: usize) -> usize {
    FIXED_SLOTS + q_width
}

/// Which surrogate the graph feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    /// Noise slots filled, third global = depth (GNNs-1 / PST).
    Fidelity,
    /// Noise slots zeroed, third global = embedding count (GNNs-2 / KTA).
    Performance,
}

/// A featurized circuit DAG.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitGraph {
    /// Node features, one row per node.
    pub nodes: Array2<f64>,
    /// Directed wire edges (src, dst); parallel edges are kept when a
    /// 2-qubit gate follows the same pair.
    pub edges: Vec<(usize, usize)>,
    /// True for gate nodes, false for input/measurement pseudo-nodes.
    pub key_mask: Vec<bool>,
    pub globals: [f64; 3],
    pub mode: GraphMode,
    pub q_width: usize,
    pub normalized: bool,
}

impl CircuitGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.nrows()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Node-type slot within the 6-wide one-hot block.
fn type_slot(kind: GateKind, gate_set: &[GateKind]) -> Result<usize> {
    match kind {
        GateKind::Input => Ok(0),
        GateKind::Measure => Ok(1),
        gate => gate_set
            .iter()
            .position(|&g| g == gate)
            .map(|p| p + 2)
            .ok_or_else(|| {
                Error::Invariant(format!("gate {gate} not in the device gate set"))
            }),
    }
}

/// Convert a circuit into a featurized DAG.
pub fn build_graph(
    circuit: &Circuit,
    calib: &DeviceTopology,
    mode: GraphMode,
    q_width: usize,
) -> Result<CircuitGraph> {
    let n = circuit.local_qubits;
    if n > q_width {
        return Err(Error::Invariant(format!(
            "{n} qubits exceed the target-qubit feature width {q_width}"
        )));
    }
    if calib.gate_set.len() > 4 {
        return Err(Error::Invariant(
            "node-type registry holds at most 4 native gates".into(),
        ));
    }
    let width = feature_width(q_width);
    let n_ops = circuit.ops.len();
    let n_nodes = n_ops + 2 * n;
    let mut nodes = Array2::<f64>::zeros((n_nodes, width));
    let mut key_mask = vec![false; n_nodes];

    let qubit_cal: Vec<_> = circuit
        .subgraph
        .qubit_ids
        .iter()
        .map(|&id| calib.qubit(id))
        .collect::<Result<Vec<_>>>()?;

    let noisy = mode == GraphMode::Fidelity;
    let noise_base = 1 + 6 + q_width + 1;

    // input nodes 0..n
    for q in 0..n {
        let mut row = nodes.row_mut(q);
        row[1 + type_slot(GateKind::Input, &calib.gate_set)?] = 1.0;
        row[1 + 6 + q] = 1.0;
        if noisy {
            row[noise_base] = qubit_cal[q].t1_us;
            row[noise_base + 1] = qubit_cal[q].t2_us;
        }
    }
    // gate nodes n..n+n_ops
    for (pos, op) in circuit.ops.iter().enumerate() {
        let node = n + pos;
        key_mask[node] = true;
        let mut row = nodes.row_mut(node);
        row[1 + type_slot(op.kind, &calib.gate_set)?] = 1.0;
        for &q in &op.qubits {
            row[1 + 6 + q] = 1.0;
        }
        if matches!(op.slot, ParamSlot::Embedding { .. }) {
            row[1 + 6 + q_width] = 1.0;
        }
        if noisy {
            let qa = op.qubits[0];
            row[noise_base] = qubit_cal[qa].t1_us;
            row[noise_base + 1] = qubit_cal[qa].t2_us;
            row[noise_base + 5] = qubit_cal[qa].readout_error;
            if op.kind.is_two_qubit() {
                let qb = op.qubits[1];
                row[noise_base + 2] = qubit_cal[qb].t1_us;
                row[noise_base + 3] = qubit_cal[qb].t2_us;
                row[noise_base + 6] = qubit_cal[qb].readout_error;
                let (da, db) = (
                    circuit.subgraph.qubit_ids[qa],
                    circuit.subgraph.qubit_ids[qb],
                );
                let edge = calib.coupling(da, db).ok_or_else(|| {
                    Error::Invariant(format!("no coupling calibration for {da}-{db}"))
                })?;
                row[noise_base + 4] = edge.two_qubit_gate_error;
            } else {
                row[noise_base + 4] = qubit_cal[qa]
                    .gate_errors
                    .get(&op.kind)
                    .copied()
                    .unwrap_or(0.0);
            }
        }
    }
    // measurement nodes
    for q in 0..n {
        let node = n + n_ops + q;
        let mut row = nodes.row_mut(node);
        row[1 + type_slot(GateKind::Measure, &calib.gate_set)?] = 1.0;
        row[1 + 6 + q] = 1.0;
        if noisy {
            row[noise_base + 5] = qubit_cal[q].readout_error;
        }
    }

    // normalized topological index (node order is already topological)
    let denom = (n_nodes.max(2) - 1) as f64;
    for i in 0..n_nodes {
        nodes[[i, 0]] = i as f64 / denom;
    }

    // wire edges
    let mut edges = Vec::with_capacity(n_ops * 2 + n);
    let mut last_on_wire: Vec<usize> = (0..n).collect();
    for (pos, op) in circuit.ops.iter().enumerate() {
        let node = n + pos;
        for &q in &op.qubits {
            edges.push((last_on_wire[q], node));
            last_on_wire[q] = node;
        }
    }
    for q in 0..n {
        edges.push((last_on_wire[q], n + n_ops + q));
    }

    let stats = circuit_stats(circuit);
    let globals = match mode {
        GraphMode::Fidelity => [
            stats.gate_count as f64,
            stats.two_qubit_count as f64,
            stats.depth as f64,
        ],
        GraphMode::Performance => [
            stats.gate_count as f64,
            stats.two_qubit_count as f64,
            stats.embed_count as f64,
        ],
    };

    Ok(CircuitGraph {
        nodes,
        edges,
        key_mask,
        globals,
        mode,
        q_width,
        normalized: false,
    })
}

/// Per-column min-max scaler fitted across all nodes of a graph pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphNormalizer {
    node_min: Vec<f64>,
    node_max: Vec<f64>,
    global_min: [f64; 3],
    global_max: [f64; 3],
}

impl GraphNormalizer {
    /// Fit over every node of every graph (and the globals likewise).
    /// Must see the whole training pool before any training.
    pub fn fit(graphs: &[&CircuitGraph]) -> Result<Self> {
        let first = graphs
            .first()
            .ok_or_else(|| Error::Invariant("cannot fit a normalizer on zero graphs".into()))?;
        let width = first.nodes.ncols();
        let mut node_min = vec![f64::INFINITY; width];
        let mut node_max = vec![f64::NEG_INFINITY; width];
        let mut global_min = [f64::INFINITY; 3];
        let mut global_max = [f64::NEG_INFINITY; 3];
        for g in graphs {
            if g.nodes.ncols() != width {
                return Err(Error::Dimension(
                    "mixed feature widths in normalizer pool".into(),
                ));
            }
            if g.normalized {
                return Err(Error::Invariant(
                    "cannot fit a normalizer on already-normalized graphs".into(),
                ));
            }
            for row in g.nodes.rows() {
                for (c, &v) in row.iter().enumerate() {
                    node_min[c] = node_min[c].min(v);
                    node_max[c] = node_max[c].max(v);
                }
            }
            for c in 0..3 {
                global_min[c] = global_min[c].min(g.globals[c]);
                global_max[c] = global_max[c].max(g.globals[c]);
            }
        }
        Ok(GraphNormalizer {
            node_min,
            node_max,
            global_min,
            global_max,
        })
    }

    /// Min-max transform to [0,1] on the fitted pool; constant columns map
    /// to 0; values outside the fitted range are not clipped. Applying to an
    /// already-normalized graph returns it unchanged.
    pub fn apply(&self, graph: &CircuitGraph) -> Result<CircuitGraph> {
        if graph.normalized {
            return Ok(graph.clone());
        }
        if graph.nodes.ncols() != self.node_min.len() {
            return Err(Error::Dimension(format!(
                "graph width {} does not match fitted width {}",
                graph.nodes.ncols(),
                self.node_min.len()
            )));
        }
        let mut out = graph.clone();
        for mut row in out.nodes.rows_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                let span = self.node_max[c] - self.node_min[c];
                *v = if span > 0.0 {
                    (*v - self.node_min[c]) / span
                } else {
                    0.0
                };
            }
        }
        for c in 0..3 {
            let span = self.global_max[c] - self.global_min[c];
            out.globals[c] = if span > 0.0 {
                (out.globals[c] - self.global_min[c]) / span
            } else {
                0.0
            };
        }
        out.normalized = true;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{assign_embedding, generate_candidate, Circuit, GateOp};
    use crate::device::{CouplingCalibration, QubitCalibration, Subgraph};
    use crate::rng::rng_from_seed;
    use std::collections::BTreeMap;
    use std::sync::Arc;

    fn tiny_device(n: usize) -> DeviceTopology {
        DeviceTopology {
            name: "tiny".into(),
            num_qubits: n,
            gate_set: vec![GateKind::Rx, GateKind::Rz, GateKind::Cz, GateKind::I],
            qubits: (0..n)
                .map(|id| QubitCalibration {
                    qubit_id: id,
                    t1_us: 100.0 + 10.0 * id as f64,
                    t2_us: 80.0 + 5.0 * id as f64,
                    readout_error: 0.01 * (id + 1) as f64,
                    gate_errors: BTreeMap::from([
                        (GateKind::Rx, 1e-3 * (id + 1) as f64),
                        (GateKind::Rz, 1e-4),
                        (GateKind::I, 0.0),
                    ]),
                })
                .collect(),
            couplings: (0..n.saturating_sub(1))
                .map(|i| CouplingCalibration {
                    qubit_a: i,
                    qubit_b: i + 1,
                    two_qubit_gate_error: 0.01 + 0.005 * i as f64,
                    duration_ns: 300.0,
                })
                .collect(),
        }
    }

    fn subgraph_of(topo: &DeviceTopology) -> Arc<Subgraph> {
        Arc::new(
            Subgraph::new(
                topo.name.clone(),
                (0..topo.num_qubits).collect(),
                topo.couplings.clone(),
            )
            .unwrap(),
        )
    }

    fn random_circuit(topo: &DeviceTopology, gates: usize, p: usize, seed: u64) -> Circuit {
        let sub = subgraph_of(topo);
        let mut rng = rng_from_seed(seed);
        loop {
            let c = generate_candidate(&sub, &topo.gate_set, gates, &mut rng).unwrap();
            if c.parameterized_positions().len() >= p {
                return assign_embedding(&c, p, &mut rng).unwrap();
            }
        }
    }

    #[test]
    fn single_rx_gives_three_nodes_two_edges() {
        let topo = tiny_device(1);
        let sub = Arc::new(Subgraph::new("tiny".into(), vec![0], vec![]).unwrap());
        let c = Circuit::new(
            sub,
            vec![GateOp {
                kind: GateKind::Rx,
                qubits: vec![0],
                slot: crate::circuit::ParamSlot::Trainable { index: 0 },
            }],
        )
        .unwrap();
        let g = build_graph(&c, &topo, GraphMode::Fidelity, DEFAULT_QUBIT_WIDTH).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
        assert_eq!(g.key_mask, vec![false, true, false]);
        assert_eq!(g.nodes.ncols(), 31);
    }

    #[test]
    fn cz_type_one_hot_is_000010() {
        let topo = tiny_device(2);
        let c = random_circuit(&topo, 30, 2, 3);
        let g = build_graph(&c, &topo, GraphMode::Fidelity, DEFAULT_QUBIT_WIDTH).unwrap();
        let cz_pos = c.ops.iter().position(|op| op.kind == GateKind::Cz).unwrap();
        let node = 2 + cz_pos;
        let one_hot: Vec<f64> = (1..7).map(|j| g.nodes[[node, j]]).collect();
        assert_eq!(one_hot, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn performance_mode_zero_fills_noise() {
        let topo = tiny_device(3);
        let c = random_circuit(&topo, 20, 2, 5);
        let g = build_graph(&c, &topo, GraphMode::Performance, DEFAULT_QUBIT_WIDTH).unwrap();
        let base = 1 + 6 + DEFAULT_QUBIT_WIDTH + 1;
        let total: f64 = g
            .nodes
            .rows()
            .into_iter()
            .map(|row| row.iter().skip(base).sum::<f64>())
            .sum();
        assert_eq!(total, 0.0);
        assert_eq!(g.globals[2], c.embed_dims() as f64);
    }

    #[test]
    fn modes_differ_only_in_noise_and_third_global() {
        let topo = tiny_device(3);
        let c = random_circuit(&topo, 25, 3, 8);
        let gf = build_graph(&c, &topo, GraphMode::Fidelity, DEFAULT_QUBIT_WIDTH).unwrap();
        let gp = build_graph(&c, &topo, GraphMode::Performance, DEFAULT_QUBIT_WIDTH).unwrap();
        assert_eq!(gf.edges, gp.edges);
        assert_eq!(gf.key_mask, gp.key_mask);
        assert_eq!(gf.globals[0], gp.globals[0]);
        assert_eq!(gf.globals[1], gp.globals[1]);
        let base = 1 + 6 + DEFAULT_QUBIT_WIDTH + 1;
        for i in 0..gf.num_nodes() {
            for j in 0..base {
                assert_eq!(gf.nodes[[i, j]], gp.nodes[[i, j]]);
            }
        }
    }

    #[test]
    fn one_hot_validity_and_node_count() {
        let topo = tiny_device(3);
        let c = random_circuit(&topo, 20, 2, 11);
        let g = build_graph(&c, &topo, GraphMode::Fidelity, DEFAULT_QUBIT_WIDTH).unwrap();
        assert_eq!(g.num_nodes(), c.ops.len() + 2 * 3);
        for (i, row) in g.nodes.rows().into_iter().enumerate() {
            let type_sum: f64 = (1..7).map(|j| row[j]).sum();
            assert_eq!(type_sum, 1.0, "node {i} type one-hot");
            let qubit_sum: f64 = (7..7 + DEFAULT_QUBIT_WIDTH).map(|j| row[j]).sum();
            let is_gate = g.key_mask[i];
            let expect = if is_gate && c.ops[i - 3].kind.is_two_qubit() {
                2.0
            } else {
                1.0
            };
            assert_eq!(qubit_sum, expect, "node {i} qubit hot slots");
        }
    }

    #[test]
    fn two_qubit_nodes_have_degree_two_each_way() {
        let topo = tiny_device(4);
        let c = random_circuit(&topo, 30, 2, 13);
        let g = build_graph(&c, &topo, GraphMode::Fidelity, DEFAULT_QUBIT_WIDTH).unwrap();
        for (pos, op) in c.ops.iter().enumerate() {
            if op.kind.is_two_qubit() {
                let node = 4 + pos;
                let indeg = g.edges.iter().filter(|(_, d)| *d == node).count();
                let outdeg = g.edges.iter().filter(|(s, _)| *s == node).count();
                assert_eq!((indeg, outdeg), (2, 2));
            }
        }
    }

    #[test]
    fn edges_respect_wire_order() {
        // topological order of the graph matches circuit op order per wire
        let topo = tiny_device(3);
        let c = random_circuit(&topo, 25, 2, 17);
        let g = build_graph(&c, &topo, GraphMode::Fidelity, DEFAULT_QUBIT_WIDTH).unwrap();
        for &(s, d) in &g.edges {
            assert!(s < d, "edge {s}->{d} must advance in topological order");
        }
    }

    #[test]
    fn qubit_width_too_small_rejected() {
        let topo = tiny_device(3);
        let c = random_circuit(&topo, 10, 1, 2);
        assert!(build_graph(&c, &topo, GraphMode::Fidelity, 2).is_err());
        assert!(build_graph(&c, &topo, GraphMode::Fidelity, 21).is_ok());
    }

    #[test]
    fn normalizer_behaviour() {
        let topo = tiny_device(3);
        let graphs: Vec<CircuitGraph> = (0..6)
            .map(|s| {
                build_graph(
                    &random_circuit(&topo, 20, 2, 100 + s),
                    &topo,
                    GraphMode::Fidelity,
                    DEFAULT_QUBIT_WIDTH,
                )
                .unwrap()
            })
            .collect();
        let refs: Vec<&CircuitGraph> = graphs.iter().collect();
        let norm = GraphNormalizer::fit(&refs).unwrap();
        for g in &graphs {
            let ng = norm.apply(g).unwrap();
            for &v in ng.nodes.iter() {
                assert!((0.0..=1.0).contains(&v), "{v}");
            }
            for &v in &ng.globals {
                assert!((0.0..=1.0).contains(&v));
            }
            // idempotent on an already-normalized graph
            let again = norm.apply(&ng).unwrap();
            assert_eq!(again.nodes, ng.nodes);
        }

        // a held-out graph with a larger T1 may exceed 1, unclipped
        let mut bigger = tiny_device(3);
        for q in &mut bigger.qubits {
            q.t1_us *= 10.0;
        }
        let held_out = build_graph(
            &random_circuit(&bigger, 20, 2, 999),
            &bigger,
            GraphMode::Fidelity,
            DEFAULT_QUBIT_WIDTH,
        )
        .unwrap();
        let ng = norm.apply(&held_out).unwrap();
        let t1_col = 1 + 6 + DEFAULT_QUBIT_WIDTH + 1;
        let max_t1 = ng
            .nodes
            .rows()
            .into_iter()
            .map(|r| r[t1_col])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(max_t1 > 1.0, "out-of-range values are preserved, not clipped");
    }

    #[test]
    fn constant_columns_map_to_zero() {
        let topo = tiny_device(2);
        let graphs: Vec<CircuitGraph> = (0..3)
            .map(|s| {
                build_graph(
                    &random_circuit(&topo, 15, 1, 200 + s),
                    &topo,
                    GraphMode::Performance,
                    DEFAULT_QUBIT_WIDTH,
                )
                .unwrap()
            })
            .collect();
        let refs: Vec<&CircuitGraph> = graphs.iter().collect();
        let norm = GraphNormalizer::fit(&refs).unwrap();
        let ng = norm.apply(&graphs[0]).unwrap();
        // noise columns are constant zero in performance mode
        let base = 1 + 6 + DEFAULT_QUBIT_WIDTH + 1;
        for row in ng.nodes.rows() {
            for j in base..base + 7 {
                assert_eq!(row[j], 0.0);
            }
        }
        // gate count is the same for every pool graph: constant -> 0
        assert_eq!(ng.globals[0], 0.0);
    }
}
