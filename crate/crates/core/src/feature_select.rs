//! mRMR feature selection.
//!
//! Greedy max-relevance/min-redundancy with the MID (difference) criterion:
//! pick the feature maximizing `MI(x_j; y)`, then repeatedly the one
//! maximizing `MI(x_j; y) - mean_{s in selected} MI(x_j; x_s)`. Mutual
//! information is estimated from joint histograms after quantile-binning
//! continuous columns (10 bins by default), in natural-log units.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default quantile bin count for continuous features.
pub const DEFAULT_BINS: usize = 10;

/// Outcome of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Chosen feature indices, in pick order.
    pub selected: Vec<usize>,
    /// Criterion value at each greedy step.
    pub scores: Vec<f64>,
}

/// Quantile-bin a column into at most `bins` groups.
fn quantile_bin(column: &[f64], bins: usize) -> Vec<usize> {
    let mut sorted: Vec<f64> = column.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let l = sorted.len();
    let mut edges = Vec::with_capacity(bins.saturating_sub(1));
    for k in 1..bins {
        let idx = (k * l) / bins;
        edges.push(sorted[idx.min(l - 1)]);
    }
    edges.dedup_by(|a, b| a == b);
    column
        .iter()
        .map(|&x| edges.partition_point(|&e| e <= x))
        .collect()
}

/// MI between two discrete (binned) columns, in nats.
fn discrete_mi(a: &[usize], b: &[usize]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let l = a.len();
    if l == 0 {
        return 0.0;
    }
    let ka = a.iter().max().map_or(0, |&m| m + 1);
    let kb = b.iter().max().map_or(0, |&m| m + 1);
    let mut joint = vec![0usize; ka * kb];
    let mut pa = vec![0usize; ka];
    let mut pb = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += 1;
        pa[x] += 1;
        pb[y] += 1;
    }
    let ln = l as f64;
    let mut mi = 0.0;
    for x in 0..ka {
        if pa[x] == 0 {
            continue;
        }
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / ln;
            mi += pxy * (pxy * ln * ln / (pa[x] as f64 * pb[y] as f64)).ln();
        }
    }
    mi.max(0.0)
}

/// MI between a continuous column (quantile-binned) and discrete labels.
pub fn mutual_information(x: &[f64], y: &[usize], bins: usize) -> Result<f64> {
    if bins < 2 {
        return Err(Error::Invariant(format!("need at least 2 bins (got {bins})")));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} feature values vs {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant(
            "feature column contains non-finite values".into(),
        ));
    }
    Ok(discrete_mi(&quantile_bin(x, bins), y))
}

/// Greedy mRMR (MID variant) selecting `p` of the `d` columns of `x`.
pub fn mrmr_select(x: &Array2<f64>, y: &[usize], p: usize) -> Result<SelectionResult> {
    mrmr_select_binned(x, y, p, DEFAULT_BINS)
}

pub fn mrmr_select_binned(
    x: &Array2<f64>,
    y: &[usize],
    p: usize,
    bins: usize,
) -> Result<SelectionResult> {
    let d = x.ncols();
    let l = x.nrows();
    if p > d {
        return Err(Error::Invariant(format!("cannot select {p} of {d} features")));
    }
    if y.len() != l {
        return Err(Error::Dimension(format!("{l} rows vs {} labels", y.len())));
    }
    if p == 0 {
        return Ok(SelectionResult {
            selected: vec![],
            scores: vec![],
        });
    }

    let binned: Vec<Vec<usize>> = (0..d)
        .map(|j| quantile_bin(&x.column(j).to_vec(), bins))
        .collect();
    let relevance: Vec<f64> = binned.iter().map(|col| discrete_mi(col, y)).collect();

    let mut selected: Vec<usize> = Vec::with_capacity(p);
    let mut scores = Vec::with_capacity(p);
    let mut chosen = vec![false; d];
    let mut redundancy_sum = vec![0.0f64; d];

    for step in 0..p {
        let mut best_j = usize::MAX;
        let mut best_score = f64::NEG_INFINITY;
        for j in 0..d {
            if chosen[j] {
                continue;
            }
            let score = if step == 0 {
                relevance[j]
            } else {
                relevance[j] - redundancy_sum[j] / step as f64
            };
            if score > best_score {
                best_score = score;
                best_j = j;
            }
        }
        chosen[best_j] = true;
        selected.push(best_j);
        scores.push(best_score);
        if step + 1 < p {
            for j in 0..d {
                if !chosen[j] {
                    redundancy_sum[j] += discrete_mi(&binned[j], &binned[best_j]);
                }
            }
        }
    }
    Ok(SelectionResult { selected, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn independent_feature_has_near_zero_mi() {
        let mut rng = crate::rng::rng_from_seed(1);
        let l = 5000;
        let x: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<usize> = (0..l).map(|_| rng.random_range(0..2)).collect();
        let mi = mutual_information(&x, &y, DEFAULT_BINS).unwrap();
        assert!(mi <= 0.02, "independent MI should be tiny, got {mi}");
    }

    #[test]
    fn identical_binary_feature_approaches_ln2() {
        let mut rng = crate::rng::rng_from_seed(2);
        let l = 20000;
        let y: Vec<usize> = (0..l).map(|_| rng.random_range(0..2)).collect();
        let x: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let mi = mutual_information(&x, &y, DEFAULT_BINS).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 0.01, "mi = {mi}");
    }

    #[test]
    fn constant_column_gives_zero() {
        let x = vec![3.7; 100];
        let y: Vec<usize> = (0..100).map(|i| i % 2).collect();
        assert_eq!(mutual_information(&x, &y, DEFAULT_BINS).unwrap(), 0.0);
    }

    fn labeled_dataset(
        l: usize,
        d: usize,
        informative: &[usize],
        seed: u64,
    ) -> (Array2<f64>, Vec<usize>) {
        let mut rng = crate::rng::rng_from_seed(seed);
        let y: Vec<usize> = (0..l).map(|_| rng.random_range(0..2)).collect();
        let mut x = Array2::zeros((l, d));
        for i in 0..l {
            for j in 0..d {
                let noise: f64 = rng.random_range(-0.3..0.3);
                x[[i, j]] = if informative.contains(&j) {
                    y[i] as f64 + noise
                } else {
                    rng.random_range(-1.0..1.0)
                };
            }
        }
        (x, y)
    }

    #[test]
    fn p1_picks_the_max_relevance_feature() {
        let (x, y) = labeled_dataset(400, 8, &[5], 3);
        let result = mrmr_select(&x, &y, 1).unwrap();
        assert_eq!(result.selected, vec![5]);
    }

    #[test]
    fn duplicate_informative_column_not_chosen_second() {
        let (mut x, y) = labeled_dataset(500, 6, &[2], 4);
        // make column 3 a copy of the informative column 2
        for i in 0..x.nrows() {
            x[[i, 3]] = x[[i, 2]];
        }
        let result = mrmr_select(&x, &y, 2).unwrap();
        assert!(result.selected[0] == 2 || result.selected[0] == 3);
        assert!(
            result.selected[1] != 2 && result.selected[1] != 3,
            "redundant duplicate was picked: {:?}",
            result.selected
        );
    }

    #[test]
    fn informative_columns_recovered() {
        // 500-sample fixture, 5 informative of 50 columns
        let informative = [4, 11, 23, 37, 48];
        let (x, y) = labeled_dataset(500, 50, &informative, 5);
        let result = mrmr_select(&x, &y, 5).unwrap();
        let mut got = result.selected.clone();
        got.sort_unstable();
        assert_eq!(got, informative.to_vec());
    }

    #[test]
    fn selection_is_deterministic_and_distinct() {
        let (x, y) = labeled_dataset(300, 20, &[1, 7], 6);
        let a = mrmr_select(&x, &y, 10).unwrap();
        let b = mrmr_select(&x, &y, 10).unwrap();
        assert_eq!(a, b);
        let mut sorted = a.selected.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);
    }

    #[test]
    fn p_greater_than_d_rejected() {
        let x = Array2::zeros((10, 3));
        let y = vec![0usize; 10];
        assert!(mrmr_select(&x, &y, 4).is_err());
    }
}
