//! Kernel matrices, kernel-target alignment and SVM classification.
//!
//! Quantum kernels are Gram matrices of data-encoded statevectors,
//! `K_ij = |<psi(x_i)|psi(x_j)>|^2`; the RBF kernel is the classical
//! baseline. KTA scores a kernel against the ideal label matrix and doubles
//! as the training objective for circuit parameters (see [`train`]).

mod svm;
mod train;

pub use svm::{svm_accuracy, svm_fit, BinarySvm, SvmModel, KKT_TOLERANCE};
pub use train::{kta_gradient, train_kernel_params, TrainOutcome};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::circuit::{bind, Circuit};
use crate::error::{Error, Result};
use crate::sim::{kernel_entry, run_statevector, StateVector};

/// Where a kernel matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelSource {
    Quantum { circuit_ref: String, params: Vec<f64> },
    Rbf { gamma: f64 },
}

/// A symmetric kernel matrix.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub entries: Array2<f64>,
    pub source: KernelSource,
}

impl KernelMatrix {
    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    /// Largest asymmetry `|K_ij - K_ji|`.
    pub fn symmetry_error(&self) -> f64 {
        let n = self.order();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.entries[[i, j]] - self.entries[[j, i]]).abs());
            }
        }
        worst
    }

    /// Plain CSV dump, one row per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.entries.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, source: KernelSource) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("kernel csv: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        let mut entries = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "kernel csv row {i} has {} cells, expected {n}",
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                entries[[i, j]] = *v;
            }
        }
        Ok(KernelMatrix { entries, source })
    }
}

/// Integer class labels with a declared class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Invariant(format!(
                "at least 2 classes required (got {num_classes})"
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Invariant(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(LabelVector {
            labels,
            num_classes,
        })
    }

    /// Infer the class count as `max + 1`.
    pub fn infer(labels: Vec<usize>) -> Result<Self> {
        let c = labels.iter().max().map_or(0, |&m| m + 1);
        Self::new(labels, c.max(2))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Distinct classes actually present.
    pub fn present_classes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_classes];
        for &l in &self.labels {
            seen[l] = true;
        }
        (0..self.num_classes).filter(|&c| seen[c]).collect()
    }

    /// ±1 encoding for binary problems: class 1 maps to +1.
    fn signed(&self) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { -1.0 })
            .collect()
    }
}

/// Simulate the encoded states for every data row.
pub fn encoded_states(circuit: &Circuit, params: &[f64], data: &Array2<f64>) -> Result<Vec<StateVector>> {
    if data.ncols() != circuit.embed_dims() {
        return Err(Error::Dimension(format!(
            "circuit embeds {} dims but data has {} columns",
            circuit.embed_dims(),
            data.ncols()
        )));
    }
    data.rows()
        .into_iter()
        .map(|row| {
            let features: Vec<f64> = row.to_vec();
            let bound = bind(circuit, &features, params)?;
            run_statevector(&bound)
        })
        .collect()
}

/// Quantum kernel matrix: states from the noiseless statevector simulator,
/// entries `|<psi_i|psi_j>|^2`. The diagonal is computed, not assumed.
pub fn kernel_matrix(circuit: &Circuit, params: &[f64], data: &Array2<f64>) -> Result<KernelMatrix> {
    let states = encoded_states(circuit, params, data)?;
    let l = states.len();
    let mut entries = Array2::zeros((l, l));
    for i in 0..l {
        for j in i..l {
            let v = kernel_entry(&states[i], &states[j])?;
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    Ok(KernelMatrix {
        entries,
        source: KernelSource::Quantum {
            circuit_ref: String::new(),
            params: params.to_vec(),
        },
    })
}

/// Rectangular kernel block between two sample sets (rows of `data_a`
/// against rows of `data_b`), e.g. test-vs-train for SVM evaluation.
pub fn cross_kernel(
    circuit: &Circuit,
    params: &[f64],
    data_a: &Array2<f64>,
    data_b: &Array2<f64>,
) -> Result<Array2<f64>> {
    let states_a = encoded_states(circuit, params, data_a)?;
    let states_b = encoded_states(circuit, params, data_b)?;
    let mut out = Array2::zeros((states_a.len(), states_b.len()));
    for (i, sa) in states_a.iter().enumerate() {
        for (j, sb) in states_b.iter().enumerate() {
            out[[i, j]] = kernel_entry(sa, sb)?;
        }
    }
    Ok(out)
}

/// Rectangular RBF block between two sample sets.
pub fn rbf_cross_kernel(data_a: &Array2<f64>, data_b: &Array2<f64>, gamma: f64) -> Result<Array2<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::Invariant(format!("gamma must be positive (got {gamma})")));
    }
    let mut out = Array2::zeros((data_a.nrows(), data_b.nrows()));
    for i in 0..data_a.nrows() {
        for j in 0..data_b.nrows() {
            let d2: f64 = data_a
                .row(i)
                .iter()
                .zip(data_b.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            out[[i, j]] = (-gamma * d2).exp();
        }
    }
    Ok(out)
}

/// RBF kernel `exp(-gamma ||x_i - x_j||^2)`.
pub fn rbf_kernel(data: &Array2<f64>, gamma: f64) -> Result<KernelMatrix> {
    if !(gamma > 0.0) {
        return Err(Error::Invariant(format!("gamma must be positive (got {gamma})")));
    }
    let l = data.nrows();
    let mut entries = Array2::zeros((l, l));
    for i in 0..l {
        for j in i..l {
            let d2: f64 = data
                .row(i)
                .iter()
                .zip(data.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = (-gamma * d2).exp();
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    Ok(KernelMatrix {
        entries,
        source: KernelSource::Rbf { gamma },
    })
}

/// Default RBF bandwidth: reciprocal of the feature dimension.
pub fn default_rbf_gamma(p: usize) -> f64 {
    1.0 / p.max(1) as f64
}

/// Ideal target matrix: 1 when labels agree, `-1/(c-1)` otherwise.
pub fn target_matrix(labels: &LabelVector) -> KernelMatrix {
    let l = labels.len();
    let c = labels.num_classes() as f64;
    let off = -1.0 / (c - 1.0);
    let mut entries = Array2::zeros((l, l));
    for i in 0..l {
        for j in 0..l {
            entries[[i, j]] = if labels.labels()[i] == labels.labels()[j] {
                1.0
            } else {
                off
            };
        }
    }
    KernelMatrix {
        entries,
        source: KernelSource::Quantum {
            circuit_ref: "target".into(),
            params: vec![],
        },
    }
}

fn frobenius_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Kernel-target alignment.
///
/// Binary labels use the closed form `y^T K y / (l sqrt(Tr K^2))`; more
/// classes use the Frobenius alignment with the ideal target matrix.
pub fn kta(kernel: &KernelMatrix, labels: &LabelVector) -> Result<f64> {
    if kernel.order() != labels.len() {
        return Err(Error::Dimension(format!(
            "kernel order {} vs {} labels",
            kernel.order(),
            labels.len()
        )));
    }
    let k = &kernel.entries;
    let norm_sq = frobenius_inner(k, k);
    if norm_sq <= 0.0 {
        return Err(Error::Numerical(
            "KTA undefined for the zero kernel matrix".into(),
        ));
    }
    if labels.num_classes() == 2 {
        let y = labels.signed();
        let l = labels.len() as f64;
        let mut quad = 0.0;
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                quad += y[i] * k[[i, j]] * y[j];
            }
        }
        Ok(quad / (l * norm_sq.sqrt()))
    } else {
        let target = target_matrix(labels);
        let t = &target.entries;
        Ok(frobenius_inner(k, t) / (norm_sq * frobenius_inner(t, t)).sqrt())
    }
}

/// Gradient of KTA with respect to each kernel entry.
pub(crate) fn kta_kernel_gradient(kernel: &KernelMatrix, labels: &LabelVector) -> Result<Array2<f64>> {
    let l = labels.len();
    let k = &kernel.entries;
    let norm_sq = frobenius_inner(k, k);
    if norm_sq <= 0.0 {
        return Err(Error::Numerical(
            "KTA gradient undefined for the zero kernel matrix".into(),
        ));
    }
    let mut grad = Array2::zeros((l, l));
    if labels.num_classes() == 2 {
        let y = labels.signed();
        let ln = l as f64;
        let mut quad = 0.0;
        for i in 0..l {
            for j in 0..l {
                quad += y[i] * k[[i, j]] * y[j];
            }
        }
        let norm = norm_sq.sqrt();
        for i in 0..l {
            for j in 0..l {
                grad[[i, j]] =
                    y[i] * y[j] / (ln * norm) - quad * k[[i, j]] / (ln * norm_sq * norm);
            }
        }
    } else {
        let target = target_matrix(labels);
        let t = &target.entries;
        let a = frobenius_inner(k, t);
        let c = frobenius_inner(t, t);
        let denom = (norm_sq * c).sqrt();
        for i in 0..l {
            for j in 0..l {
                grad[[i, j]] = (t[[i, j]] - a / norm_sq * k[[i, j]]) / denom;
            }
        }
    }
    Ok(grad)
}
