//! One-vs-rest SVM on precomputed kernels, solved by SMO.
//!
//! The dual `min 1/2 a^T Q a - e^T a` s.t. `y^T a = 0`, `0 <= a_i <= C`
//! (`Q_ij = y_i y_j K_ij`) is solved with maximal-violating-pair working-set
//! selection. Multi-class problems train one binary machine per declared
//! class; prediction takes the argmax decision value with ties broken by the
//! lowest class id.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

use super::{KernelMatrix, LabelVector};

/// KKT stopping tolerance of the SMO solver.
pub const KKT_TOLERANCE: f64 = 1e-3;

const TAU: f64 = 1e-12;

/// One binary one-vs-rest machine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinarySvm {
    /// `alpha_i * y_i` per support vector.
    pub alpha_y: Vec<f64>,
    /// Training-row index of each support vector.
    pub support: Vec<usize>,
    pub bias: f64,
    /// KKT violation `m - M` at exit (0 for degenerate problems).
    pub kkt_residual: f64,
}

impl BinarySvm {
    /// Decision value for a test row given its kernel values against the
    /// training set.
    pub fn decision(&self, k_row: &[f64]) -> f64 {
        let mut acc = self.bias;
        for (ay, &idx) in self.alpha_y.iter().zip(&self.support) {
            acc += ay * k_row[idx];
        }
        acc
    }
}

/// One-vs-rest SVM trained on a precomputed kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub num_classes: usize,
    pub num_train: usize,
    pub regularization: f64,
    pub binaries: Vec<BinarySvm>,
}

impl SvmModel {
    /// Predicted class per test row of a (test x train) kernel block.
    pub fn predict(&self, k_test: &Array2<f64>) -> Result<Vec<usize>> {
        if k_test.ncols() != self.num_train {
            return Err(Error::Dimension(format!(
                "kernel block has {} columns, model was trained on {} samples",
                k_test.ncols(),
                self.num_train
            )));
        }
        if k_test.nrows() == 0 {
            return Err(Error::Dimension("empty test set".into()));
        }
        let mut out = Vec::with_capacity(k_test.nrows());
        for row in k_test.rows() {
            let k_row: Vec<f64> = row.to_vec();
            let mut best_class = 0usize;
            let mut best_value = f64::NEG_INFINITY;
            for (class, bin) in self.binaries.iter().enumerate() {
                let v = bin.decision(&k_row);
                if v > best_value {
                    best_value = v;
                    best_class = class;
                }
            }
            out.push(best_class);
        }
        Ok(out)
    }
}

/// Train a one-vs-rest SVM on a precomputed kernel.
///
/// Kernels that fail the PSD check beyond tolerance get their negative
/// eigenvalues clipped (with a warning) before solving.
pub fn svm_fit(kernel: &KernelMatrix, labels: &LabelVector, c_reg: f64) -> Result<SvmModel> {
    let l = kernel.order();
    if l != labels.len() {
        return Err(Error::Dimension(format!(
            "kernel order {} vs {} labels",
            l,
            labels.len()
        )));
    }
    if l < 2 {
        return Err(Error::Invariant("need at least 2 training samples".into()));
    }
    if labels.present_classes().len() < 2 {
        return Err(Error::Invariant(
            "training labels contain a single class".into(),
        ));
    }
    if !(c_reg > 0.0) {
        return Err(Error::Invariant(format!("C must be positive (got {c_reg})")));
    }

    let entries = if linalg::is_psd(&kernel.entries, 1e-9) {
        kernel.entries.clone()
    } else {
        log::warn!("kernel is not PSD within tolerance; clipping negative eigenvalues");
        linalg::clip_to_psd(&kernel.entries)
    };

    let binaries = (0..labels.num_classes())
        .map(|class| {
            let y: Vec<f64> = labels
                .labels()
                .iter()
                .map(|&lab| if lab == class { 1.0 } else { -1.0 })
                .collect();
            smo_binary(&entries, &y, c_reg)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SvmModel {
        num_classes: labels.num_classes(),
        num_train: l,
        regularization: c_reg,
        binaries,
    })
}

/// Fraction of correctly classified test rows.
pub fn svm_accuracy(model: &SvmModel, k_test: &Array2<f64>, labels_test: &LabelVector) -> Result<f64> {
    if k_test.nrows() != labels_test.len() {
        return Err(Error::Dimension(format!(
            "{} test rows vs {} labels",
            k_test.nrows(),
            labels_test.len()
        )));
    }
    let preds = model.predict(k_test)?;
    let correct = preds
        .iter()
        .zip(labels_test.labels())
        .filter(|(p, t)| p == t)
        .count();
    Ok(correct as f64 / preds.len() as f64)
}

fn smo_binary(k: &Array2<f64>, y: &[f64], c_reg: f64) -> Result<BinarySvm> {
    let l = y.len();
    let has_pos = y.iter().any(|&v| v > 0.0);
    let has_neg = y.iter().any(|&v| v < 0.0);
    if !has_pos || !has_neg {
        // One-sided OVR split: constant decision at the only label's sign.
        let bias = if has_pos { 1.0 } else { -1.0 };
        return Ok(BinarySvm {
            alpha_y: vec![],
            support: vec![],
            bias,
            kkt_residual: 0.0,
        });
    }

    let mut alpha = vec![0.0f64; l];
    // gradient of the dual objective; alpha = 0 gives G = -e
    let mut grad = vec![-1.0f64; l];

    let q = |i: usize, j: usize| y[i] * y[j] * k[[i, j]];

    let max_iter = (100 * l).max(10_000);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        // maximal violating pair
        let mut i_sel = usize::MAX;
        let mut m_val = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut m_low = f64::INFINITY;
        for t in 0..l {
            let up = (y[t] > 0.0 && alpha[t] < c_reg) || (y[t] < 0.0 && alpha[t] > 0.0);
            let low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c_reg);
            let v = -y[t] * grad[t];
            if up && v > m_val {
                m_val = v;
                i_sel = t;
            }
            if low && v < m_low {
                m_low = v;
                j_sel = t;
            }
        }
        residual = m_val - m_low;
        if residual <= KKT_TOLERANCE || i_sel == usize::MAX || j_sel == usize::MAX {
            break;
        }
        let (i, j) = (i_sel, j_sel);
        let old_ai = alpha[i];
        let old_aj = alpha[j];

        if (y[i] - y[j]).abs() > 0.5 {
            // opposite signs
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
                if alpha[i] > c_reg {
                    alpha[i] = c_reg;
                    alpha[j] = c_reg - diff;
                }
            } else {
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if alpha[j] > c_reg {
                    alpha[j] = c_reg;
                    alpha[i] = c_reg + diff;
                }
            }
        } else {
            // equal signs
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c_reg {
                if alpha[i] > c_reg {
                    alpha[i] = c_reg;
                    alpha[j] = sum - c_reg;
                }
                if alpha[j] > c_reg {
                    alpha[j] = c_reg;
                    alpha[i] = sum - c_reg;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        let dai = alpha[i] - old_ai;
        let daj = alpha[j] - old_aj;
        if dai == 0.0 && daj == 0.0 {
            break;
        }
        for t in 0..l {
            grad[t] += q(t, i) * dai + q(t, j) * daj;
        }
    }

    // bias from the final violating-pair bounds
    let mut m_val = f64::NEG_INFINITY;
    let mut m_low = f64::INFINITY;
    for t in 0..l {
        let up = (y[t] > 0.0 && alpha[t] < c_reg) || (y[t] < 0.0 && alpha[t] > 0.0);
        let low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c_reg);
        let v = -y[t] * grad[t];
        if up {
            m_val = m_val.max(v);
        }
        if low {
            m_low = m_low.min(v);
        }
    }
    let bias = 0.5 * (m_val + m_low);

    let mut alpha_y = Vec::new();
    let mut support = Vec::new();
    for (t, &a) in alpha.iter().enumerate() {
        debug_assert!((-1e-12..=c_reg + 1e-12).contains(&a), "alpha out of box");
        if a > 1e-12 {
            alpha_y.push(a * y[t]);
            support.push(t);
        }
    }
    Ok(BinarySvm {
        alpha_y,
        support,
        bias,
        kkt_residual: residual.max(0.0),
    })
}
