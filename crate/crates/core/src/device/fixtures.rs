//! Synthetic calibration fixtures.
//!
//! Real calibration snapshots are not redistributable, so tests, benchmarks
//! and the CLI demo use deterministic synthetic devices that mimic the scale
//! and noise profile of the hardware families of interest: a 133-qubit
//! heavy-hex device with a handful of outlier qubits, and a 7-qubit H-shaped
//! device with the `{rz, x, cnot, i}` gate set.

use std::collections::BTreeMap;

use rand::Rng;

use crate::rng::{derive_stream, SeededRng};

use super::{CouplingCalibration, DeviceTopology, GateKind, QubitCalibration};

/// A synthetic large device plus the ids of its injected noise outliers.
#[derive(Debug, Clone)]
pub struct LargeDeviceFixture {
    pub topology: DeviceTopology,
    /// Qubits given an outlier Rx gate error (14 of them).
    pub high_rx_ids: Vec<usize>,
    /// Qubits given an outlier readout error (18 of them), disjoint from
    /// `high_rx_ids`.
    pub high_readout_ids: Vec<usize>,
}

/// 133-qubit heavy-hex-style device with gate set `{rx, rz, cz, i}`.
///
/// 7 rows of 16 qubits joined by 21 bridge qubits. 14 qubits carry outlier
/// Rx errors and 18 further qubits carry outlier readout errors, so that
/// ranking by either noise type shows the sharp head-then-plateau decay that
/// motivates exclusion-based subgraph selection.
pub fn torino_like() -> LargeDeviceFixture {
    const ROWS: usize = 7;
    const COLS: usize = 16;
    let mut rng = derive_stream(0x7041_1101, "torino-like", 0);

    let row_id = |r: usize, c: usize| r * COLS + c;
    let mut couplings: Vec<(usize, usize)> = Vec::new();
    for r in 0..ROWS {
        for c in 0..COLS - 1 {
            couplings.push((row_id(r, c), row_id(r, c + 1)));
        }
    }
    // Bridge qubits between row pairs; 4 on even gaps, 3 on odd gaps.
    let mut next_id = ROWS * COLS;
    for gap in 0..ROWS - 1 {
        let cols: &[usize] = if gap % 2 == 0 {
            &[0, 4, 8, 12]
        } else {
            &[2, 6, 10]
        };
        for &c in cols {
            couplings.push((row_id(gap, c), next_id));
            couplings.push((next_id, row_id(gap + 1, c)));
            next_id += 1;
        }
    }
    let num_qubits = next_id;
    debug_assert_eq!(num_qubits, 133);

    let mut qubits: Vec<QubitCalibration> = (0..num_qubits)
        .map(|id| {
            let t1 = rng.random_range(80.0..350.0);
            let t2 = rng.random_range(40.0..250.0_f64).min(2.0 * t1);
            QubitCalibration {
                qubit_id: id,
                t1_us: t1,
                t2_us: t2,
                readout_error: rng.random_range(0.005..0.035),
                gate_errors: BTreeMap::from([
                    (GateKind::Rx, rng.random_range(2e-4..3e-3)),
                    (GateKind::Rz, rng.random_range(1e-5..1e-4)),
                    (GateKind::I, 0.0),
                ]),
            }
        })
        .collect();

    let high_rx_ids = sample_distinct(&mut rng, num_qubits, 14, &[]);
    for &id in &high_rx_ids {
        qubits[id]
            .gate_errors
            .insert(GateKind::Rx, rng.random_range(0.04..0.12));
    }
    let high_readout_ids = sample_distinct(&mut rng, num_qubits, 18, &high_rx_ids);
    for &id in &high_readout_ids {
        qubits[id].readout_error = rng.random_range(0.08..0.30);
    }

    let couplings = couplings
        .into_iter()
        .map(|(a, b)| CouplingCalibration {
            qubit_a: a,
            qubit_b: b,
            two_qubit_gate_error: rng.random_range(3e-3..2.2e-2),
            duration_ns: rng.random_range(280.0..620.0),
        })
        .collect();

    let topology = DeviceTopology {
        name: "torino-like".into(),
        num_qubits,
        gate_set: vec![GateKind::Rx, GateKind::Rz, GateKind::Cz, GateKind::I],
        qubits,
        couplings,
    };
    topology.validate().expect("fixture must be valid");
    LargeDeviceFixture {
        topology,
        high_rx_ids,
        high_readout_ids,
    }
}

/// 7-qubit H-shaped device with gate set `{rz, x, cnot, i}`.
pub fn perth_like() -> DeviceTopology {
    let mut rng = derive_stream(0x7041_1101, "perth-like", 0);
    let qubits = (0..7)
        .map(|id| {
            let t1 = rng.random_range(90.0..220.0);
            let t2 = rng.random_range(60.0..180.0_f64).min(2.0 * t1);
            QubitCalibration {
                qubit_id: id,
                t1_us: t1,
                t2_us: t2,
                readout_error: rng.random_range(0.01..0.05),
                gate_errors: BTreeMap::from([
                    (GateKind::X, rng.random_range(2e-4..1e-3)),
                    (GateKind::Rz, rng.random_range(1e-6..1e-5)),
                    (GateKind::I, 0.0),
                ]),
            }
        })
        .collect();
    let couplings = [(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)]
        .into_iter()
        .map(|(a, b)| CouplingCalibration {
            qubit_a: a,
            qubit_b: b,
            two_qubit_gate_error: rng.random_range(5e-3..2e-2),
            duration_ns: rng.random_range(300.0..500.0),
        })
        .collect();
    let topology = DeviceTopology {
        name: "perth-like".into(),
        num_qubits: 7,
        gate_set: vec![GateKind::Rz, GateKind::X, GateKind::Cnot, GateKind::I],
        qubits,
        couplings,
    };
    topology.validate().expect("fixture must be valid");
    topology
}

fn sample_distinct(
    rng: &mut SeededRng,
    universe: usize,
    count: usize,
    forbidden: &[usize],
) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(count);
    while chosen.len() < count {
        let id = rng.random_range(0..universe);
        if !chosen.contains(&id) && !forbidden.contains(&id) {
            chosen.push(id);
        }
    }
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{calib_report, select_subgraph, NoiseType};

    #[test]
    fn torino_like_has_133_qubits() {
        let fixture = torino_like();
        assert_eq!(fixture.topology.num_qubits, 133);
        assert_eq!(fixture.high_rx_ids.len(), 14);
        assert_eq!(fixture.high_readout_ids.len(), 18);
        fixture.topology.validate().unwrap();
    }

    #[test]
    fn readout_report_leads_with_injected_outliers() {
        let fixture = torino_like();
        let rows = calib_report(&fixture.topology, NoiseType::Readout).unwrap();
        let head: Vec<usize> = rows[..18]
            .iter()
            .map(|r| r.entity.parse::<usize>().unwrap())
            .collect();
        let mut head_sorted = head.clone();
        head_sorted.sort_unstable();
        assert_eq!(head_sorted, fixture.high_readout_ids);
    }

    #[test]
    fn excluding_worst_rx_leaves_119_candidates() {
        let fixture = torino_like();
        let rows = calib_report(&fixture.topology, NoiseType::OneQubitGate(GateKind::Rx)).unwrap();
        let head: Vec<usize> = rows[..14]
            .iter()
            .map(|r| r.entity.parse::<usize>().unwrap())
            .collect();
        let mut head_sorted = head;
        head_sorted.sort_unstable();
        assert_eq!(head_sorted, fixture.high_rx_ids);
        assert_eq!(fixture.topology.num_qubits - 14, 119);
    }

    #[test]
    fn subgraph_selection_works_on_fixture() {
        let fixture = torino_like();
        let sub = select_subgraph(&fixture.topology, 4, 14, &NoiseType::default_order()).unwrap();
        assert_eq!(sub.len(), 4);
        for id in &sub.qubit_ids {
            assert!(!fixture.high_rx_ids.contains(id));
            assert!(!fixture.high_readout_ids.contains(id));
        }
    }

    #[test]
    fn perth_like_uses_alternate_gate_set() {
        let topo = perth_like();
        assert_eq!(topo.num_qubits, 7);
        assert_eq!(
            topo.gate_set,
            vec![GateKind::Rz, GateKind::X, GateKind::Cnot, GateKind::I]
        );
    }
}
