//! Low-noise subgraph selection.
//!
//! Exclusion pass: for each noise type in order, drop the `e_xc` worst
//! qubits (1-qubit types, incident edges removed too) or worst edges
//! (2-qubit type) from the topology. From the residue, pick a connected
//! `n`-vertex induced subgraph maximizing the maximum vertex degree; ties go
//! to the lowest mean 2-qubit edge error, then to the lexicographically
//! smallest qubit-id list.
//!
//! The search is exhaustive (ESU enumeration) for `n <= 8` and a BFS-style
//! beam search (width 64) above that.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::{CouplingCalibration, DeviceTopology, NoiseType, Subgraph};

const EXHAUSTIVE_LIMIT: usize = 8;
const BEAM_WIDTH: usize = 64;

/// Residue graph after exclusions: surviving vertices and edges.
struct Residue {
    vertices: Vec<usize>,
    edges: Vec<CouplingCalibration>,
}

impl Residue {
    fn remove_qubits(&mut self, ids: &BTreeSet<usize>) {
        self.vertices.retain(|v| !ids.contains(v));
        self.edges
            .retain(|e| !ids.contains(&e.qubit_a) && !ids.contains(&e.qubit_b));
    }
}

/// Select a connected `n`-qubit subgraph after per-noise-type exclusions.
pub fn select_subgraph(
    topology: &DeviceTopology,
    n: usize,
    e_xc: usize,
    noise_types: &[NoiseType],
) -> Result<Subgraph> {
    if n == 0 {
        return Err(Error::Invariant("subgraph size must be at least 1".into()));
    }
    let mut residue = Residue {
        vertices: topology.qubits.iter().map(|q| q.qubit_id).collect(),
        edges: topology.couplings.clone(),
    };
    residue.vertices.sort_unstable();

    for &noise in noise_types {
        if e_xc == 0 {
            break;
        }
        if noise.is_single_qubit() {
            let mut ranked: Vec<(usize, f64)> = residue
                .vertices
                .iter()
                .map(|&id| {
                    let q = topology.qubit(id).expect("residue qubit calibrated");
                    let err = match noise {
                        NoiseType::Readout => q.readout_error,
                        NoiseType::OneQubitGateMax => q.max_gate_error(),
                        NoiseType::OneQubitGate(g) => {
                            q.gate_errors.get(&g).copied().unwrap_or(0.0)
                        }
                        NoiseType::TwoQubitGate => unreachable!(),
                    };
                    (id, err)
                })
                .collect();
            ranked.sort_by(|(ia, ea), (ib, eb)| {
                eb.partial_cmp(ea)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| ia.cmp(ib))
            });
            let worst: BTreeSet<usize> = ranked.iter().take(e_xc).map(|(id, _)| *id).collect();
            residue.remove_qubits(&worst);
        } else {
            let mut order: Vec<usize> = (0..residue.edges.len()).collect();
            order.sort_by(|&i, &j| {
                let (ea, eb) = (
                    residue.edges[i].two_qubit_gate_error,
                    residue.edges[j].two_qubit_gate_error,
                );
                eb.partial_cmp(&ea)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| residue.edges[i].key().cmp(&residue.edges[j].key()))
            });
            let doomed: BTreeSet<usize> = order.into_iter().take(e_xc).collect();
            let mut idx = 0;
            residue.edges.retain(|_| {
                let keep = !doomed.contains(&idx);
                idx += 1;
                keep
            });
        }
    }

    if residue.vertices.len() < n {
        return Err(Error::Infeasible(format!(
            "need {n} qubits but only {} survive the exclusions",
            residue.vertices.len()
        )));
    }

    let graph = LocalGraph::new(&residue);
    let best = if n <= EXHAUSTIVE_LIMIT {
        enumerate_best(&graph, n)
    } else {
        beam_best(&graph, n)
    };
    let chosen = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no connected {n}-qubit subgraph survives the exclusions"
        ))
    })?;

    let qubit_ids: Vec<usize> = chosen.iter().map(|&v| graph.labels[v]).collect();
    let id_set: BTreeSet<usize> = qubit_ids.iter().cloned().collect();
    let edges: Vec<CouplingCalibration> = residue
        .edges
        .iter()
        .filter(|e| id_set.contains(&e.qubit_a) && id_set.contains(&e.qubit_b))
        .cloned()
        .collect();
    Subgraph::new(topology.name.clone(), qubit_ids, edges)
}

/// Residue graph re-indexed to 0..len for the search.
struct LocalGraph {
    labels: Vec<usize>,
    adj: Vec<Vec<usize>>,
    err: Vec<Vec<(usize, f64)>>,
}

impl LocalGraph {
    fn new(residue: &Residue) -> Self {
        let labels = residue.vertices.clone();
        let index = |id: usize| labels.binary_search(&id).expect("vertex present");
        let mut adj = vec![Vec::new(); labels.len()];
        let mut err = vec![Vec::new(); labels.len()];
        for e in &residue.edges {
            let a = index(e.qubit_a);
            let b = index(e.qubit_b);
            adj[a].push(b);
            adj[b].push(a);
            err[a].push((b, e.two_qubit_gate_error));
            err[b].push((a, e.two_qubit_gate_error));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        LocalGraph { labels, adj, err }
    }

    /// (max vertex degree, mean edge error) of the induced subgraph.
    fn score(&self, members: &[usize]) -> (usize, f64) {
        let set: BTreeSet<usize> = members.iter().cloned().collect();
        let mut max_deg = 0;
        let mut err_sum = 0.0;
        let mut err_cnt = 0usize;
        for &v in members {
            let mut deg = 0;
            for &(w, e) in &self.err[v] {
                if set.contains(&w) {
                    deg += 1;
                    if w > v {
                        err_sum += e;
                        err_cnt += 1;
                    }
                }
            }
            max_deg = max_deg.max(deg);
        }
        let mean = if err_cnt > 0 {
            err_sum / err_cnt as f64
        } else {
            0.0
        };
        (max_deg, mean)
    }
}

/// Candidate ordering: higher max degree, then lower mean error, then
/// lexicographically smaller device-qubit ids.
fn better(
    graph: &LocalGraph,
    cand: &[usize],
    cand_score: (usize, f64),
    best: &[usize],
    best_score: (usize, f64),
) -> bool {
    if cand_score.0 != best_score.0 {
        return cand_score.0 > best_score.0;
    }
    if (cand_score.1 - best_score.1).abs() > 1e-15 {
        return cand_score.1 < best_score.1;
    }
    let cand_ids: Vec<usize> = cand.iter().map(|&v| graph.labels[v]).collect();
    let best_ids: Vec<usize> = best.iter().map(|&v| graph.labels[v]).collect();
    cand_ids < best_ids
}

/// Exhaustive ESU enumeration of connected induced `k`-subgraphs.
fn enumerate_best(graph: &LocalGraph, k: usize) -> Option<Vec<usize>> {
    let n = graph.labels.len();
    let mut best: Option<(Vec<usize>, (usize, f64))> = None;
    let mut sub = Vec::with_capacity(k);
    let mut in_sub = vec![false; n];
    let mut in_hood = vec![false; n];

    fn extend(
        graph: &LocalGraph,
        k: usize,
        root: usize,
        sub: &mut Vec<usize>,
        ext: &[usize],
        in_sub: &mut Vec<bool>,
        in_hood: &mut Vec<bool>,
        best: &mut Option<(Vec<usize>, (usize, f64))>,
    ) {
        if sub.len() == k {
            let mut members = sub.clone();
            members.sort_unstable();
            let score = graph.score(&members);
            match best {
                None => *best = Some((members, score)),
                Some((b, bs)) => {
                    if better(graph, &members, score, b, *bs) {
                        *best = Some((members, score));
                    }
                }
            }
            return;
        }
        let mut ext = ext.to_vec();
        while let Some(w) = ext.pop() {
            // Exclusive neighbors of w: > root, outside sub and its hood.
            let mut new_ext = ext.clone();
            let newly: Vec<usize> = graph.adj[w]
                .iter()
                .cloned()
                .filter(|&u| u > root && !in_hood[u])
                .collect();
            new_ext.extend(&newly);
            sub.push(w);
            in_sub[w] = true;
            let mut marked = Vec::new();
            for &u in &newly {
                in_hood[u] = true;
                marked.push(u);
            }
            extend(graph, k, root, sub, &new_ext, in_sub, in_hood, best);
            sub.pop();
            in_sub[w] = false;
            for u in marked {
                in_hood[u] = false;
            }
        }
    }

    for v in 0..n {
        sub.clear();
        sub.push(v);
        in_sub.iter_mut().for_each(|x| *x = false);
        in_hood.iter_mut().for_each(|x| *x = false);
        in_sub[v] = true;
        in_hood[v] = true;
        let ext: Vec<usize> = graph.adj[v].iter().cloned().filter(|&u| u > v).collect();
        for &u in &ext {
            in_hood[u] = true;
        }
        extend(
            graph, k, v, &mut sub, &ext, &mut in_sub, &mut in_hood, &mut best,
        );
    }
    best.map(|(members, _)| members)
}

/// BFS-expansion beam search for larger subgraphs; exact only at small n.
fn beam_best(graph: &LocalGraph, k: usize) -> Option<Vec<usize>> {
    let n = graph.labels.len();
    let mut beam: BTreeSet<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    for _ in 1..k {
        let mut next: BTreeSet<Vec<usize>> = BTreeSet::new();
        for state in &beam {
            let set: BTreeSet<usize> = state.iter().cloned().collect();
            for &v in state {
                for &w in &graph.adj[v] {
                    if !set.contains(&w) {
                        let mut grown = state.clone();
                        grown.push(w);
                        grown.sort_unstable();
                        next.insert(grown);
                    }
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        let mut scored: Vec<(Vec<usize>, (usize, f64))> = next
            .into_iter()
            .map(|s| {
                let sc = graph.score(&s);
                (s, sc)
            })
            .collect();
        scored.sort_by(|(sa, a), (sb, b)| {
            b.0.cmp(&a.0)
                .then_with(|| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                .then_with(|| {
                    let ia: Vec<usize> = sa.iter().map(|&v| graph.labels[v]).collect();
                    let ib: Vec<usize> = sb.iter().map(|&v| graph.labels[v]).collect();
                    ia.cmp(&ib)
                })
        });
        beam = scored
            .into_iter()
            .take(BEAM_WIDTH)
            .map(|(s, _)| s)
            .collect();
    }
    let mut best: Option<(Vec<usize>, (usize, f64))> = None;
    for state in beam {
        let score = graph.score(&state);
        match &best {
            None => best = Some((state, score)),
            Some((b, bs)) => {
                if better(graph, &state, score, b, *bs) {
                    best = Some((state, score));
                }
            }
        }
    }
    best.map(|(members, _)| members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{GateKind, QubitCalibration};
    use std::collections::BTreeMap;

    fn line_device(n: usize) -> DeviceTopology {
        DeviceTopology {
            name: "line".into(),
            num_qubits: n,
            gate_set: vec![GateKind::Rx, GateKind::Rz, GateKind::Cz, GateKind::I],
            qubits: (0..n)
                .map(|id| QubitCalibration {
                    qubit_id: id,
                    t1_us: 100.0,
                    t2_us: 80.0,
                    readout_error: 0.01 + 0.001 * id as f64,
                    gate_errors: BTreeMap::from([(GateKind::Rx, 1e-3)]),
                })
                .collect(),
            couplings: (0..n - 1)
                .map(|i| CouplingCalibration {
                    qubit_a: i,
                    qubit_b: i + 1,
                    two_qubit_gate_error: 0.01,
                    duration_ns: 300.0,
                })
                .collect(),
        }
    }

    #[test]
    fn no_exclusions_full_topology() {
        let topo = line_device(5);
        let sub = select_subgraph(&topo, 5, 0, &NoiseType::default_order()).unwrap();
        assert_eq!(sub.qubit_ids, vec![0, 1, 2, 3, 4]);
        assert_eq!(sub.edges.len(), 4);
    }

    #[test]
    fn path_center_exclusion_is_infeasible() {
        // a-b-c with b having the worst readout; excluding it disconnects a, c.
        let mut topo = line_device(3);
        topo.qubits[1].readout_error = 0.2;
        let err = select_subgraph(&topo, 2, 1, &[NoiseType::Readout]).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn worst_readout_qubit_removed() {
        let mut topo = line_device(4);
        topo.qubits[3].readout_error = 0.3;
        let sub = select_subgraph(&topo, 3, 1, &[NoiseType::Readout]).unwrap();
        assert_eq!(sub.qubit_ids, vec![0, 1, 2]);
    }

    #[test]
    fn edge_exclusion_removes_edges_not_qubits() {
        let mut topo = line_device(4);
        // ring: add 3-0 closing edge with the worst error
        topo.couplings.push(CouplingCalibration {
            qubit_a: 0,
            qubit_b: 3,
            two_qubit_gate_error: 0.09,
            duration_ns: 300.0,
        });
        let sub = select_subgraph(&topo, 4, 1, &[NoiseType::TwoQubitGate]).unwrap();
        assert_eq!(sub.qubit_ids, vec![0, 1, 2, 3]);
        assert_eq!(sub.edges.len(), 3, "worst ring edge dropped");
        assert!(sub.edges.iter().all(|e| e.key() != (0, 3)));
    }

    #[test]
    fn maximizes_degree_of_connectivity() {
        // star center 0 with leaves 1..4 plus a separate path 5-6-7-8.
        let mut topo = line_device(9);
        topo.couplings.clear();
        for leaf in 1..5 {
            topo.couplings.push(CouplingCalibration {
                qubit_a: 0,
                qubit_b: leaf,
                two_qubit_gate_error: 0.02,
                duration_ns: 300.0,
            });
        }
        for i in 5..8 {
            topo.couplings.push(CouplingCalibration {
                qubit_a: i,
                qubit_b: i + 1,
                two_qubit_gate_error: 0.001,
                duration_ns: 300.0,
            });
        }
        let sub = select_subgraph(&topo, 4, 0, &NoiseType::default_order()).unwrap();
        // the star (max degree 3) wins over the path (max degree 2) even
        // though the path has lower edge errors
        assert_eq!(sub.qubit_ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn ties_break_on_mean_edge_error_then_ids() {
        // two disjoint triangles, the second with lower errors.
        let mut topo = line_device(6);
        topo.couplings.clear();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            topo.couplings.push(CouplingCalibration {
                qubit_a: a,
                qubit_b: b,
                two_qubit_gate_error: 0.03,
                duration_ns: 300.0,
            });
        }
        for (a, b) in [(3, 4), (4, 5), (3, 5)] {
            topo.couplings.push(CouplingCalibration {
                qubit_a: a,
                qubit_b: b,
                two_qubit_gate_error: 0.004,
                duration_ns: 300.0,
            });
        }
        let sub = select_subgraph(&topo, 3, 0, &NoiseType::default_order()).unwrap();
        assert_eq!(sub.qubit_ids, vec![3, 4, 5]);
    }

    /// Brute force over all vertex subsets for graphs small enough.
    fn brute_force_best(topo: &DeviceTopology, n: usize) -> Option<Vec<usize>> {
        let ids: Vec<usize> = topo.qubits.iter().map(|q| q.qubit_id).collect();
        let total = ids.len();
        let mut best: Option<(Vec<usize>, usize, f64)> = None;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let members: Vec<usize> = (0..total).filter(|i| mask >> i & 1 == 1).map(|i| ids[i]).collect();
            let set: BTreeSet<usize> = members.iter().cloned().collect();
            let edges: Vec<&CouplingCalibration> = topo
                .couplings
                .iter()
                .filter(|e| set.contains(&e.qubit_a) && set.contains(&e.qubit_b))
                .collect();
            // connectivity
            let mut seen = BTreeSet::new();
            let mut stack = vec![members[0]];
            seen.insert(members[0]);
            while let Some(v) = stack.pop() {
                for e in &edges {
                    let o = if e.qubit_a == v {
                        Some(e.qubit_b)
                    } else if e.qubit_b == v {
                        Some(e.qubit_a)
                    } else {
                        None
                    };
                    if let Some(o) = o {
                        if seen.insert(o) {
                            stack.push(o);
                        }
                    }
                }
            }
            if seen.len() != n {
                continue;
            }
            let mut max_deg = 0;
            for &v in &members {
                let deg = edges
                    .iter()
                    .filter(|e| e.qubit_a == v || e.qubit_b == v)
                    .count();
                max_deg = max_deg.max(deg);
            }
            let mean = if edges.is_empty() {
                0.0
            } else {
                edges.iter().map(|e| e.two_qubit_gate_error).sum::<f64>() / edges.len() as f64
            };
            let replace = match &best {
                None => true,
                Some((bm, bd, be)) => {
                    max_deg > *bd
                        || (max_deg == *bd && mean < *be - 1e-15)
                        || (max_deg == *bd && (mean - *be).abs() <= 1e-15 && members < *bm)
                }
            };
            if replace {
                best = Some((members, max_deg, mean));
            }
        }
        best.map(|(m, _, _)| m)
    }

    #[test]
    fn matches_brute_force_on_small_graphs() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from_seed(11);
        for trial in 0..40 {
            let nv = 5 + trial % 4; // 5..8 vertices
            let mut topo = line_device(nv);
            topo.couplings.clear();
            for a in 0..nv {
                for b in (a + 1)..nv {
                    if rng.random::<f64>() < 0.45 {
                        topo.couplings.push(CouplingCalibration {
                            qubit_a: a,
                            qubit_b: b,
                            two_qubit_gate_error: 0.001 + 0.05 * rng.random::<f64>(),
                            duration_ns: 300.0,
                        });
                    }
                }
            }
            for n in 2..=nv.min(4) {
                let ours = select_subgraph(&topo, n, 0, &[]);
                let brute = brute_force_best(&topo, n);
                match (ours, brute) {
                    (Ok(sub), Some(expect)) => {
                        assert_eq!(sub.qubit_ids, expect, "trial {trial} n {n}");
                    }
                    (Err(Error::Infeasible(_)), None) => {}
                    (a, b) => panic!("trial {trial} n {n}: mismatch {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn beam_search_handles_large_n() {
        let topo = line_device(16);
        let sub = select_subgraph(&topo, 10, 0, &[]).unwrap();
        assert_eq!(sub.len(), 10);
        sub.validate().unwrap();
    }
}
