//! Small dense linear-algebra helpers for symmetric/Hermitian matrices.
//!
//! Kernel matrices and density matrices are validated spectrally in a few
//! places (PSD checks, negative-eigenvalue clipping). The sizes involved are
//! modest, so a cyclic Jacobi eigensolver is plenty and keeps the crate free
//! of external LAPACK bindings.

use ndarray::Array2;

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors in columns, so
/// `a = v * diag(w) * v^T`. Eigenvalues are sorted ascending.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);

    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    idx.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let w: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
    let mut vs = Array2::<f64>::zeros((n, n));
    for (new_col, &old_col) in idx.iter().enumerate() {
        for r in 0..n {
            vs[[r, new_col]] = v[[r, old_col]];
        }
    }
    (w, vs)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(a: &Array2<f64>) -> f64 {
    let (w, _) = symmetric_eigen(a);
    w.first().copied().unwrap_or(0.0)
}

/// Clip negative eigenvalues of a symmetric matrix to zero and reconstruct.
pub fn clip_to_psd(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let (w, v) = symmetric_eigen(a);
    let mut out = Array2::<f64>::zeros((n, n));
    for (k, &wk) in w.iter().enumerate() {
        let lam = wk.max(0.0);
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = v[[i, k]];
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[[i, j]] += lam * vik * v[[j, k]];
            }
        }
    }
    out
}

/// Cheap PSD test: Cholesky with a tolerance on the diagonal pivots.
///
/// Returns `true` when the matrix is positive semidefinite up to `tol`
/// (pivots may dip to `-tol` before the test fails).
pub fn is_psd(a: &Array2<f64>, tol: f64) -> bool {
    let n = a.nrows();
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d < -tol {
            return false;
        }
        let d = d.max(0.0);
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            // Semi-definite pivot: column is in the span of earlier ones.
            l[i * n + j] = if dj > 1e-12 { s / dj } else { 0.0 };
        }
    }
    true
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_of_diagonal() {
        let a = array![[3.0, 0.0], [0.0, -1.0]];
        let (w, _) = symmetric_eigen(&a);
        assert!((w[0] + 1.0).abs() < 1e-12);
        assert!((w[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstructs() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 1.0]];
        let (w, v) = symmetric_eigen(&a);
        let mut rec = Array2::<f64>::zeros((3, 3));
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    rec[[i, j]] += w[k] * v[[i, k]] * v[[j, k]];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((rec[[i, j]] - a[[i, j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn psd_checks() {
        let psd = array![[2.0, 1.0], [1.0, 2.0]];
        let indef = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(is_psd(&psd, 1e-9));
        assert!(!is_psd(&indef, 1e-9));
        assert!(min_eigenvalue(&indef) < -0.9);
        let clipped = clip_to_psd(&indef);
        assert!(min_eigenvalue(&clipped) > -1e-10);
    }
}
