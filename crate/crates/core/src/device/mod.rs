//! Quantum-device topology and calibration data.
//!
//! A [`DeviceTopology`] is the parsed calibration document: per-qubit T1/T2,
//! readout and gate errors plus the coupling graph with 2-qubit gate errors.
//! [`select_subgraph`] carves a low-noise connected region out of it;
//! [`placement_distribution`] turns edge errors into the sampling
//! distribution used during circuit generation.

mod select;

pub mod fixtures;

pub use select::select_subgraph;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gate vocabulary: native device gates plus the `input`/`measure`
/// pseudo-kinds used by graph featurization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    I,
    X,
    Rx,
    Rz,
    Cz,
    Cnot,
    Input,
    Measure,
}

impl GateKind {
    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Cz | GateKind::Cnot)
    }

    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Rz)
    }

    pub fn is_pseudo(self) -> bool {
        matches!(self, GateKind::Input | GateKind::Measure)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::I => "i",
            GateKind::X => "x",
            GateKind::Rx => "rx",
            GateKind::Rz => "rz",
            GateKind::Cz => "cz",
            GateKind::Cnot => "cnot",
            GateKind::Input => "input",
            GateKind::Measure => "measure",
        };
        f.write_str(s)
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "id" => Ok(GateKind::I),
            "x" => Ok(GateKind::X),
            "rx" => Ok(GateKind::Rx),
            "rz" => Ok(GateKind::Rz),
            "cz" => Ok(GateKind::Cz),
            "cnot" | "cx" => Ok(GateKind::Cnot),
            "input" => Ok(GateKind::Input),
            "measure" => Ok(GateKind::Measure),
            other => Err(Error::Parse(format!("unknown gate kind '{other}'"))),
        }
    }
}

/// Calibration figures for a single qubit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitCalibration {
    #[serde(rename = "id")]
    pub qubit_id: usize,
    /// Relaxation time, microseconds.
    pub t1_us: f64,
    /// Dephasing time, microseconds.
    pub t2_us: f64,
    /// Readout assignment error probability.
    pub readout_error: f64,
    /// Per-gate error probability for the native 1-qubit gates.
    pub gate_errors: BTreeMap<GateKind, f64>,
}

impl QubitCalibration {
    fn validate(&self) -> Result<()> {
        if !(self.t1_us > 0.0) {
            return Err(Error::Invariant(format!(
                "qubit {}: t1 must be > 0 (got {})",
                self.qubit_id, self.t1_us
            )));
        }
        if !(self.t2_us > 0.0) {
            return Err(Error::Invariant(format!(
                "qubit {}: t2 must be > 0 (got {})",
                self.qubit_id, self.t2_us
            )));
        }
        if !(0.0..=1.0).contains(&self.readout_error) {
            return Err(Error::Invariant(format!(
                "qubit {}: readout_error {} outside [0,1]",
                self.qubit_id, self.readout_error
            )));
        }
        for (gate, err) in &self.gate_errors {
            if !(0.0..=1.0).contains(err) {
                return Err(Error::Invariant(format!(
                    "qubit {}: gate error for {} is {} (outside [0,1])",
                    self.qubit_id, gate, err
                )));
            }
            if gate.is_two_qubit() || gate.is_pseudo() {
                return Err(Error::Invariant(format!(
                    "qubit {}: gate_errors may only contain 1-qubit gates (found {})",
                    self.qubit_id, gate
                )));
            }
        }
        Ok(())
    }

    /// Largest 1-qubit gate error on this qubit (0 when none are listed).
    pub fn max_gate_error(&self) -> f64 {
        self.gate_errors.values().cloned().fold(0.0, f64::max)
    }
}

/// Calibration for one coupled qubit pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingCalibration {
    #[serde(rename = "a")]
    pub qubit_a: usize,
    #[serde(rename = "b")]
    pub qubit_b: usize,
    /// 2-qubit gate error probability, strictly positive.
    #[serde(rename = "error")]
    pub two_qubit_gate_error: f64,
    /// 2-qubit gate duration, nanoseconds.
    pub duration_ns: f64,
}

impl CouplingCalibration {
    fn validate(&self) -> Result<()> {
        if self.qubit_a == self.qubit_b {
            return Err(Error::Invariant(format!(
                "coupling endpoints must differ (got {}-{})",
                self.qubit_a, self.qubit_b
            )));
        }
        if !(self.two_qubit_gate_error > 0.0 && self.two_qubit_gate_error <= 1.0) {
            return Err(Error::Invariant(format!(
                "coupling {}-{}: error must lie in (0,1] so 1/e is finite (got {})",
                self.qubit_a, self.qubit_b, self.two_qubit_gate_error
            )));
        }
        if !(self.duration_ns > 0.0) {
            return Err(Error::Invariant(format!(
                "coupling {}-{}: duration must be > 0",
                self.qubit_a, self.qubit_b
            )));
        }
        Ok(())
    }

    /// Undirected key with the smaller id first.
    pub fn key(&self) -> (usize, usize) {
        if self.qubit_a <= self.qubit_b {
            (self.qubit_a, self.qubit_b)
        } else {
            (self.qubit_b, self.qubit_a)
        }
    }
}

/// A device: name, native gate set, per-qubit and per-coupling calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceTopology {
    pub name: String,
    pub num_qubits: usize,
    pub gate_set: Vec<GateKind>,
    pub qubits: Vec<QubitCalibration>,
    pub couplings: Vec<CouplingCalibration>,
}

impl DeviceTopology {
    /// Check all structural invariants; every loader goes through this.
    pub fn validate(&self) -> Result<()> {
        if self.qubits.len() != self.num_qubits {
            return Err(Error::Invariant(format!(
                "num_qubits = {} but {} qubit entries present",
                self.num_qubits,
                self.qubits.len()
            )));
        }
        let mut seen_ids = BTreeSet::new();
        for q in &self.qubits {
            q.validate()?;
            if q.qubit_id >= self.num_qubits {
                return Err(Error::Invariant(format!(
                    "qubit id {} out of range (num_qubits = {})",
                    q.qubit_id, self.num_qubits
                )));
            }
            if !seen_ids.insert(q.qubit_id) {
                return Err(Error::Invariant(format!("duplicate qubit id {}", q.qubit_id)));
            }
        }
        let mut seen_edges = BTreeSet::new();
        for c in &self.couplings {
            c.validate()?;
            for end in [c.qubit_a, c.qubit_b] {
                if !seen_ids.contains(&end) {
                    return Err(Error::Invariant(format!(
                        "coupling {}-{} references unknown qubit {}",
                        c.qubit_a, c.qubit_b, end
                    )));
                }
            }
            if !seen_edges.insert(c.key()) {
                return Err(Error::Invariant(format!(
                    "duplicate undirected coupling {}-{}",
                    c.qubit_a, c.qubit_b
                )));
            }
        }
        let n_param = self
            .gate_set
            .iter()
            .filter(|g| g.is_parameterized())
            .count();
        let n_two = self.gate_set.iter().filter(|g| g.is_two_qubit()).count();
        if n_param < 1 {
            return Err(Error::Invariant(
                "gate_set needs at least one parameterized 1-qubit gate".into(),
            ));
        }
        if n_two != 1 {
            return Err(Error::Invariant(format!(
                "gate_set needs exactly one 2-qubit gate (found {n_two})"
            )));
        }
        if self.gate_set.iter().any(|g| g.is_pseudo()) {
            return Err(Error::Invariant(
                "gate_set must not contain input/measure pseudo-kinds".into(),
            ));
        }
        Ok(())
    }

    /// Calibration entry for a qubit id.
    pub fn qubit(&self, id: usize) -> Result<&QubitCalibration> {
        self.qubits
            .iter()
            .find(|q| q.qubit_id == id)
            .ok_or_else(|| Error::Invariant(format!("no calibration for qubit {id}")))
    }

    /// Coupling entry for an undirected pair.
    pub fn coupling(&self, a: usize, b: usize) -> Option<&CouplingCalibration> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.couplings.iter().find(|c| c.key() == key)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let topo: DeviceTopology =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("calibration: {e}")))?;
        topo.validate()?;
        Ok(topo)
    }
}

/// Load and validate a calibration document.
pub fn load_topology(path: impl AsRef<Path>) -> Result<DeviceTopology> {
    let text = std::fs::read_to_string(path.as_ref())?;
    DeviceTopology::from_json(&text)
}

/// A connected set of device qubits with the couplings induced among them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Subgraph {
    /// Name of the parent topology.
    pub parent: String,
    /// Selected device qubit ids, ascending.
    pub qubit_ids: Vec<usize>,
    /// Couplings surviving among the selected qubits.
    pub edges: Vec<CouplingCalibration>,
}

impl Subgraph {
    pub fn new(parent: String, mut qubit_ids: Vec<usize>, edges: Vec<CouplingCalibration>) -> Result<Self> {
        qubit_ids.sort_unstable();
        let sub = Subgraph {
            parent,
            qubit_ids,
            edges,
        };
        sub.validate()?;
        Ok(sub)
    }

    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<usize> = self.qubit_ids.iter().cloned().collect();
        if ids.len() != self.qubit_ids.len() {
            return Err(Error::Invariant("subgraph has duplicate qubit ids".into()));
        }
        for e in &self.edges {
            e.validate()?;
            if !ids.contains(&e.qubit_a) || !ids.contains(&e.qubit_b) {
                return Err(Error::Invariant(format!(
                    "subgraph edge {}-{} leaves the qubit set",
                    e.qubit_a, e.qubit_b
                )));
            }
        }
        if !self.is_connected() {
            return Err(Error::Invariant("subgraph is not connected".into()));
        }
        Ok(())
    }

    /// Number of qubits.
    pub fn len(&self) -> usize {
        self.qubit_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubit_ids.is_empty()
    }

    /// Map a device qubit id to its local index.
    pub fn local_index(&self, device_id: usize) -> Option<usize> {
        self.qubit_ids.binary_search(&device_id).ok()
    }

    /// Edge endpoints in local indices, smaller index first, edge-list order.
    pub fn local_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .map(|e| {
                let a = self.local_index(e.qubit_a).expect("validated endpoint");
                let b = self.local_index(e.qubit_b).expect("validated endpoint");
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect()
    }

    fn is_connected(&self) -> bool {
        let n = self.qubit_ids.len();
        if n == 0 {
            return false;
        }
        if n == 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); n];
        for (a, b) in self.local_edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sub: Subgraph =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("subgraph: {e}")))?;
        sub.validate()?;
        Ok(sub)
    }
}

/// Load and validate a subgraph document.
pub fn load_subgraph(path: impl AsRef<Path>) -> Result<Subgraph> {
    let text = std::fs::read_to_string(path.as_ref())?;
    Subgraph::from_json(&text)
}

/// Noise figures a qubit or edge can be ranked/excluded by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseType {
    /// Worst 1-qubit gate error of each qubit.
    OneQubitGateMax,
    /// Error of one specific 1-qubit gate.
    OneQubitGate(GateKind),
    /// Readout assignment error.
    Readout,
    /// 2-qubit gate error on couplings.
    TwoQubitGate,
}

impl NoiseType {
    /// Exclusions on 1-qubit types remove qubits; 2-qubit types remove edges.
    pub fn is_single_qubit(self) -> bool {
        !matches!(self, NoiseType::TwoQubitGate)
    }

    /// The order exclusions are applied in when none is given.
    pub fn default_order() -> Vec<NoiseType> {
        vec![
            NoiseType::OneQubitGateMax,
            NoiseType::Readout,
            NoiseType::TwoQubitGate,
        ]
    }
}

impl fmt::Display for NoiseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseType::OneQubitGateMax => f.write_str("1q"),
            NoiseType::OneQubitGate(g) => write!(f, "{g}"),
            NoiseType::Readout => f.write_str("readout"),
            NoiseType::TwoQubitGate => f.write_str("2q"),
        }
    }
}

impl FromStr for NoiseType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1q" => Ok(NoiseType::OneQubitGateMax),
            "readout" => Ok(NoiseType::Readout),
            "2q" => Ok(NoiseType::TwoQubitGate),
            gate => {
                let kind = GateKind::from_str(gate)?;
                if kind.is_two_qubit() {
                    Ok(NoiseType::TwoQubitGate)
                } else if kind.is_pseudo() {
                    Err(Error::Parse(format!("'{gate}' is not a noise type")))
                } else {
                    Ok(NoiseType::OneQubitGate(kind))
                }
            }
        }
    }
}

/// Default exclusion budget: one tenth of the device, rounded up.
pub fn default_exclusion_budget(num_qubits: usize) -> usize {
    num_qubits.div_ceil(10)
}

/// 2-qubit gate placement probabilities over the subgraph edges.
///
/// `P(q_i, q_j | e_j) = (1/e_j) / sum_j (1/e_j)`, returned in edge-list order
/// keyed by the undirected device-qubit pair.
pub fn placement_distribution(subgraph: &Subgraph) -> Result<Vec<((usize, usize), f64)>> {
    if subgraph.edges.is_empty() {
        return Err(Error::Invariant(
            "placement distribution needs at least one edge".into(),
        ));
    }
    let inv: Vec<f64> = subgraph
        .edges
        .iter()
        .map(|e| 1.0 / e.two_qubit_gate_error)
        .collect();
    let total: f64 = inv.iter().sum();
    Ok(subgraph
        .edges
        .iter()
        .zip(inv)
        .map(|(e, w)| (e.key(), w / total))
        .collect())
}

/// One row of a calibration report: the qubit or edge and its error.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub entity: String,
    pub error: f64,
}

/// Errors of one noise type, sorted descending (ties by id ascending).
pub fn calib_report(topology: &DeviceTopology, noise_type: NoiseType) -> Result<Vec<ReportRow>> {
    let mut rows: Vec<(Vec<usize>, f64)> = match noise_type {
        NoiseType::Readout => topology
            .qubits
            .iter()
            .map(|q| (vec![q.qubit_id], q.readout_error))
            .collect(),
        NoiseType::OneQubitGateMax => topology
            .qubits
            .iter()
            .map(|q| (vec![q.qubit_id], q.max_gate_error()))
            .collect(),
        NoiseType::OneQubitGate(gate) => {
            if !topology.qubits.iter().any(|q| q.gate_errors.contains_key(&gate)) {
                return Err(Error::Invariant(format!(
                    "gate '{gate}' not present in any qubit calibration"
                )));
            }
            topology
                .qubits
                .iter()
                .map(|q| {
                    (
                        vec![q.qubit_id],
                        q.gate_errors.get(&gate).copied().unwrap_or(0.0),
                    )
                })
                .collect()
        }
        NoiseType::TwoQubitGate => topology
            .couplings
            .iter()
            .map(|c| {
                let (a, b) = c.key();
                (vec![a, b], c.two_qubit_gate_error)
            })
            .collect(),
    };
    rows.sort_by(|(ia, ea), (ib, eb)| {
        eb.partial_cmp(ea)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| ia.cmp(ib))
    });
    Ok(rows
        .into_iter()
        .map(|(ids, error)| ReportRow {
            entity: ids
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join("-"),
            error,
        })
        .collect())
}

/// Render a calibration report as CSV (`entity,error`).
pub fn report_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("entity,error\n");
    for row in rows {
        out.push_str(&format!("{},{}\n", row.entity, row.error));
    }
    out
}
