//! Dataset ingestion and preprocessing.
//!
//! Sources: synthetic Gaussian blobs, the credit-card fraud CSV (V1..V28
//! features, `Class` label; 1000-sample draw with at least 5% fraud and a
//! 30% test split), and MNIST/FMNIST IDX files (balanced class-subset
//! splits). All sampling is seeded. Preprocessing selects `p` features with
//! mRMR on the raw training set, then min-max scales each selected feature
//! to `[0, pi]` for use as embedding angles.

use std::f64::consts::PI;
use std::path::PathBuf;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_select::mrmr_select;
use crate::rng::{derive_stream, SeededRng};

/// Which dataset to load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    /// Seeded Gaussian blobs, balanced across classes.
    SyntheticBlobs {
        classes: usize,
        dims: usize,
        train: usize,
        test: usize,
        #[serde(default = "default_cluster_std")]
        cluster_std: f64,
        #[serde(default = "default_separation")]
        separation: f64,
    },
    /// Credit-card fraud CSV (binary: fraudulent vs not).
    CcCsv {
        path: PathBuf,
        #[serde(default = "default_cc_samples")]
        samples: usize,
        #[serde(default = "default_cc_test_fraction")]
        test_fraction: f64,
        #[serde(default = "default_cc_min_fraud")]
        min_fraud_fraction: f64,
    },
    /// MNIST-style IDX files restricted to a class subset.
    MnistIdx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default = "default_mnist_classes")]
        classes: Vec<usize>,
        #[serde(default = "default_idx_train")]
        train: usize,
        #[serde(default = "default_idx_test")]
        test: usize,
    },
    /// Fashion-MNIST IDX files (T-shirt, Trouser, Bag, Ankle boot).
    FmnistIdx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default = "default_fmnist_classes")]
        classes: Vec<usize>,
        #[serde(default = "default_idx_train")]
        train: usize,
        #[serde(default = "default_idx_test")]
        test: usize,
    },
}

fn default_cluster_std() -> f64 {
    0.6
}
fn default_separation() -> f64 {
    2.5
}
fn default_cc_samples() -> usize {
    1000
}
fn default_cc_test_fraction() -> f64 {
    0.3
}
fn default_cc_min_fraud() -> f64 {
    0.05
}
fn default_mnist_classes() -> Vec<usize> {
    vec![0, 1, 2, 3, 4]
}
fn default_fmnist_classes() -> Vec<usize> {
    vec![0, 1, 8, 9]
}
fn default_idx_train() -> usize {
    2000
}
fn default_idx_test() -> usize {
    400
}

/// A loaded train/test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub x_train: Array2<f64>,
    pub y_train: Vec<usize>,
    pub x_test: Array2<f64>,
    pub y_test: Vec<usize>,
    pub num_classes: usize,
}

/// Load a dataset; every random draw derives from `seed`.
pub fn load_dataset(spec: &DatasetSpec, seed: u64) -> Result<Dataset> {
    match spec {
        DatasetSpec::SyntheticBlobs {
            classes,
            dims,
            train,
            test,
            cluster_std,
            separation,
        } => synthetic_blobs(*classes, *dims, *train, *test, *cluster_std, *separation, seed),
        DatasetSpec::CcCsv {
            path,
            samples,
            test_fraction,
            min_fraud_fraction,
        } => load_cc_csv(path, *samples, *test_fraction, *min_fraud_fraction, seed),
        DatasetSpec::MnistIdx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            classes,
            train,
            test,
        }
        | DatasetSpec::FmnistIdx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            classes,
            train,
            test,
        } => load_idx_subset(
            train_images,
            train_labels,
            test_images,
            test_labels,
            classes,
            *train,
            *test,
            seed,
        ),
    }
}

fn gaussian(rng: &mut SeededRng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn synthetic_blobs(
    classes: usize,
    dims: usize,
    train: usize,
    test: usize,
    cluster_std: f64,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if classes < 2 {
        return Err(Error::Invariant("need at least 2 classes".into()));
    }
    if dims == 0 || train == 0 || test == 0 {
        return Err(Error::Invariant("blob dataset dimensions must be positive".into()));
    }
    let mut rng = derive_stream(seed, "blobs", 0);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let raw: Vec<f64> = (0..dims).map(|_| gaussian(&mut rng)).collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
            raw.iter().map(|v| v / norm * separation).collect()
        })
        .collect();
    let fill = |count: usize, rng: &mut SeededRng| -> (Array2<f64>, Vec<usize>) {
        let mut x = Array2::zeros((count, dims));
        let mut y = Vec::with_capacity(count);
        for i in 0..count {
            let class = i % classes;
            y.push(class);
            for d in 0..dims {
                x[[i, d]] = centers[class][d] + cluster_std * gaussian(rng);
            }
        }
        (x, y)
    };
    let (x_train, y_train) = fill(train, &mut rng);
    let (x_test, y_test) = fill(test, &mut rng);
    Ok(Dataset {
        x_train,
        y_train,
        x_test,
        y_test,
        num_classes: classes,
    })
}

fn load_cc_csv(
    path: &PathBuf,
    samples: usize,
    test_fraction: f64,
    min_fraud_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let feature_cols: Vec<usize> = (1..=28)
        .map(|i| {
            headers
                .iter()
                .position(|h| h.trim_matches('"') == format!("V{i}"))
                .ok_or_else(|| Error::Parse(format!("missing column V{i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let class_col = headers
        .iter()
        .position(|h| h.trim_matches('"') == "Class")
        .ok_or_else(|| Error::Parse("missing column Class".into()))?;

    let mut fraud: Vec<Vec<f64>> = Vec::new();
    let mut normal: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let feats: Vec<f64> = feature_cols
            .iter()
            .map(|&c| {
                record[c]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad feature value: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let label: f64 = record[class_col]
            .trim()
            .trim_matches('"')
            .parse()
            .map_err(|e| Error::Parse(format!("bad class value: {e}")))?;
        if label >= 0.5 {
            fraud.push(feats);
        } else {
            normal.push(feats);
        }
    }
    if fraud.is_empty() {
        return Err(Error::Invariant("no fraudulent rows in source data".into()));
    }
    let total = fraud.len() + normal.len();
    let min_fraud = (min_fraud_fraction * samples as f64).ceil() as usize;
    let proportional = (samples as f64 * fraud.len() as f64 / total as f64).round() as usize;
    let want_fraud = min_fraud.max(proportional).min(samples);
    if fraud.len() < want_fraud {
        return Err(Error::Invariant(format!(
            "source has {} fraud rows, {want_fraud} needed for a {min_fraud_fraction} floor",
            fraud.len()
        )));
    }
    let want_normal = samples - want_fraud;
    if normal.len() < want_normal {
        return Err(Error::Invariant(format!(
            "source has {} normal rows, {want_normal} needed",
            normal.len()
        )));
    }

    let mut rng = derive_stream(seed, "cc", 0);
    fraud.shuffle(&mut rng);
    normal.shuffle(&mut rng);
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(samples);
    rows.extend(fraud.into_iter().take(want_fraud).map(|f| (f, 1usize)));
    rows.extend(normal.into_iter().take(want_normal).map(|f| (f, 0usize)));
    rows.shuffle(&mut rng);

    let test_n = ((samples as f64) * test_fraction).round() as usize;
    let train_n = samples - test_n;
    let to_arrays = |slice: &[(Vec<f64>, usize)]| {
        let mut x = Array2::zeros((slice.len(), 28));
        let mut y = Vec::with_capacity(slice.len());
        for (i, (feats, label)) in slice.iter().enumerate() {
            for (j, v) in feats.iter().enumerate() {
                x[[i, j]] = *v;
            }
            y.push(*label);
        }
        (x, y)
    };
    let (x_train, y_train) = to_arrays(&rows[..train_n]);
    let (x_test, y_test) = to_arrays(&rows[train_n..]);
    for (name, y) in [("train", &y_train), ("test", &y_test)] {
        if !y.contains(&0) || !y.contains(&1) {
            return Err(Error::Invariant(format!(
                "{name} split is missing a class; choose a different seed or larger sample"
            )));
        }
    }
    Ok(Dataset {
        x_train,
        y_train,
        x_test,
        y_test,
        num_classes: 2,
    })
}

fn read_idx_images(path: &PathBuf) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 16 {
        return Err(Error::Parse(format!("{}: truncated IDX header", path.display())));
    }
    let magic = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
    if magic != 2051 {
        return Err(Error::Parse(format!(
            "{}: bad image magic {magic} (expected 2051)",
            path.display()
        )));
    }
    let count = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let rows = u32::from_be_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_be_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let pixels = rows * cols;
    if bytes.len() != 16 + count * pixels {
        return Err(Error::Parse(format!("{}: truncated IDX payload", path.display())));
    }
    Ok((count, pixels, bytes[16..].to_vec()))
}

fn read_idx_labels(path: &PathBuf) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 {
        return Err(Error::Parse(format!("{}: truncated IDX header", path.display())));
    }
    let magic = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
    if magic != 2049 {
        return Err(Error::Parse(format!(
            "{}: bad label magic {magic} (expected 2049)",
            path.display()
        )));
    }
    let count = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + count {
        return Err(Error::Parse(format!("{}: truncated IDX payload", path.display())));
    }
    Ok(bytes[8..].to_vec())
}

#[allow(clippy::too_many_arguments)]
fn load_idx_subset(
    train_images: &PathBuf,
    train_labels: &PathBuf,
    test_images: &PathBuf,
    test_labels: &PathBuf,
    classes: &[usize],
    train_total: usize,
    test_total: usize,
    seed: u64,
) -> Result<Dataset> {
    if classes.len() < 2 {
        return Err(Error::Invariant("need at least 2 classes".into()));
    }
    let mut rng = derive_stream(seed, "idx", 0);
    let pick = |images: &PathBuf,
                    labels: &PathBuf,
                    total: usize,
                    rng: &mut SeededRng|
     -> Result<(Array2<f64>, Vec<usize>)> {
        let (count, pixels, data) = read_idx_images(images)?;
        let raw_labels = read_idx_labels(labels)?;
        if raw_labels.len() != count {
            return Err(Error::Parse("image/label counts differ".into()));
        }
        let per_class = total / classes.len();
        let mut x = Array2::zeros((per_class * classes.len(), pixels));
        let mut y = Vec::with_capacity(per_class * classes.len());
        let mut row = 0;
        for (new_label, &class) in classes.iter().enumerate() {
            let mut members: Vec<usize> = (0..count)
                .filter(|&i| raw_labels[i] as usize == class)
                .collect();
            if members.len() < per_class {
                return Err(Error::Invariant(format!(
                    "class {class} has only {} samples, {per_class} needed",
                    members.len()
                )));
            }
            members.shuffle(rng);
            for &idx in members.iter().take(per_class) {
                for p in 0..pixels {
                    x[[row, p]] = data[idx * pixels + p] as f64;
                }
                y.push(new_label);
                row += 1;
            }
        }
        Ok((x, y))
    };
    let (x_train, y_train) = pick(train_images, train_labels, train_total, &mut rng)?;
    let (x_test, y_test) = pick(test_images, test_labels, test_total, &mut rng)?;
    Ok(Dataset {
        x_train,
        y_train,
        x_test,
        y_test,
        num_classes: classes.len(),
    })
}

/// Per-feature min-max scaler onto `[0, pi]`, fitted on the training set.
/// Values outside the fitted range map outside `[0, pi]` (no clipping).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleScaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl AngleScaler {
    pub fn fit(x_train: &Array2<f64>) -> Self {
        let d = x_train.ncols();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in x_train.rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        AngleScaler { min, max }
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.min.len() {
            return Err(Error::Dimension(format!(
                "scaler fitted on {} features, got {}",
                self.min.len(),
                x.ncols()
            )));
        }
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let span = self.max[j] - self.min[j];
                *v = if span > 0.0 {
                    (*v - self.min[j]) / span * PI
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }
}

/// Dataset after feature selection and angle scaling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessedDataset {
    /// mRMR-selected raw-feature indices, in pick order.
    pub selected_features: Vec<usize>,
    pub scaler: AngleScaler,
    /// Scaled training features (angles).
    pub x_train: Array2<f64>,
    pub y_train: Vec<usize>,
    pub x_test: Array2<f64>,
    pub y_test: Vec<usize>,
    pub num_classes: usize,
}

/// Select `p` features with mRMR on the raw training set, then scale both
/// splits into embedding angles.
pub fn preprocess(dataset: &Dataset, p: usize) -> Result<ProcessedDataset> {
    let selection = mrmr_select(&dataset.x_train, &dataset.y_train, p)?;
    let pick = |x: &Array2<f64>| {
        let mut out = Array2::zeros((x.nrows(), p));
        for (newc, &oldc) in selection.selected.iter().enumerate() {
            for r in 0..x.nrows() {
                out[[r, newc]] = x[[r, oldc]];
            }
        }
        out
    };
    let train_sel = pick(&dataset.x_train);
    let test_sel = pick(&dataset.x_test);
    let scaler = AngleScaler::fit(&train_sel);
    let x_train = scaler.transform(&train_sel)?;
    let x_test = scaler.transform(&test_sel)?;
    Ok(ProcessedDataset {
        selected_features: selection.selected,
        scaler,
        x_train,
        y_train: dataset.y_train.clone(),
        x_test,
        y_test: dataset.y_test.clone(),
        num_classes: dataset.num_classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_blobs_balanced_and_deterministic() {
        let spec = DatasetSpec::SyntheticBlobs {
            classes: 2,
            dims: 14,
            train: 200,
            test: 60,
            cluster_std: 0.6,
            separation: 2.5,
        };
        let a = load_dataset(&spec, 42).unwrap();
        let b = load_dataset(&spec, 42).unwrap();
        assert_eq!(a.x_train, b.x_train);
        assert_eq!(a.y_test, b.y_test);
        let class0 = a.y_train.iter().filter(|&&y| y == 0).count();
        assert_eq!(class0, 100, "balanced split");
        assert_eq!(a.x_test.nrows(), 60);
        let c = load_dataset(&spec, 43).unwrap();
        assert_ne!(a.x_train, c.x_train, "different seed, different data");
    }

    fn write_cc_fixture(dir: &std::path::Path, rows: usize, fraud_every: usize) -> PathBuf {
        let mut text = String::from("\"Time\"");
        for i in 1..=28 {
            text.push_str(&format!(",\"V{i}\""));
        }
        text.push_str(",\"Amount\",\"Class\"\n");
        let mut rng = crate::rng::rng_from_seed(7);
        for r in 0..rows {
            let fraud = r % fraud_every == 0;
            text.push_str(&format!("{r}"));
            for i in 0..28 {
                let base = if fraud { 2.0 } else { 0.0 };
                let v: f64 = base + 0.1 * ((r * 31 + i * 17) % 100) as f64 / 100.0
                    + rng.random_range(-0.05..0.05);
                text.push_str(&format!(",{v:.6}"));
            }
            text.push_str(&format!(",10.0,\"{}\"\n", if fraud { 1 } else { 0 }));
        }
        let path = dir.join("cc.csv");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn cc_csv_enforces_fraud_floor_and_split() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_cc_fixture(dir.path(), 3000, 12);
        let spec = DatasetSpec::CcCsv {
            path,
            samples: 1000,
            test_fraction: 0.3,
            min_fraud_fraction: 0.05,
        };
        let ds = load_dataset(&spec, 5).unwrap();
        assert_eq!(ds.x_train.nrows() + ds.x_test.nrows(), 1000);
        assert_eq!(ds.x_test.nrows(), 300);
        assert_eq!(ds.x_train.ncols(), 28);
        let fraud_total = ds.y_train.iter().chain(&ds.y_test).filter(|&&y| y == 1).count();
        assert!(fraud_total >= 50, "at least 5% fraud, got {fraud_total}");
        let rerun = load_dataset(&spec, 5).unwrap();
        assert_eq!(ds.x_train, rerun.x_train);
    }

    #[test]
    fn cc_csv_missing_file_errors() {
        let spec = DatasetSpec::CcCsv {
            path: PathBuf::from("/nonexistent/cc.csv"),
            samples: 100,
            test_fraction: 0.3,
            min_fraud_fraction: 0.05,
        };
        assert!(load_dataset(&spec, 1).is_err());
    }

    fn write_idx_fixture(dir: &std::path::Path, prefix: &str, per_class: &[usize]) -> (PathBuf, PathBuf) {
        // tiny 2x2 images; label i repeated per_class[i] times
        let count: usize = per_class.iter().sum();
        let mut images = Vec::new();
        images.extend_from_slice(&2051u32.to_be_bytes());
        images.extend_from_slice(&(count as u32).to_be_bytes());
        images.extend_from_slice(&2u32.to_be_bytes());
        images.extend_from_slice(&2u32.to_be_bytes());
        let mut labels = Vec::new();
        labels.extend_from_slice(&2049u32.to_be_bytes());
        labels.extend_from_slice(&(count as u32).to_be_bytes());
        let mut k = 0u8;
        for (class, &n) in per_class.iter().enumerate() {
            for _ in 0..n {
                images.extend_from_slice(&[class as u8 * 10 + k % 7, k, 255 - k, class as u8]);
                labels.push(class as u8);
                k = k.wrapping_add(1);
            }
        }
        let ip = dir.join(format!("{prefix}-images-idx3-ubyte"));
        let lp = dir.join(format!("{prefix}-labels-idx1-ubyte"));
        std::fs::write(&ip, images).unwrap();
        std::fs::write(&lp, labels).unwrap();
        (ip, lp)
    }

    #[test]
    fn idx_subset_balanced_and_label_remapped() {
        let dir = tempfile::tempdir().unwrap();
        let (ti, tl) = write_idx_fixture(dir.path(), "train", &[50, 50, 50, 50, 50, 5]);
        let (si, sl) = write_idx_fixture(dir.path(), "t10k", &[20, 20, 20, 20, 20, 2]);
        let spec = DatasetSpec::MnistIdx {
            train_images: ti,
            train_labels: tl,
            test_images: si,
            test_labels: sl,
            classes: vec![0, 1, 2, 3, 4],
            train: 100,
            test: 50,
        };
        let ds = load_dataset(&spec, 3).unwrap();
        assert_eq!(ds.x_train.nrows(), 100);
        assert_eq!(ds.x_test.nrows(), 50);
        assert_eq!(ds.num_classes, 5);
        assert!(ds.y_train.iter().all(|&y| y < 5));
        for class in 0..5 {
            assert_eq!(ds.y_test.iter().filter(|&&y| y == class).count(), 10);
        }
    }

    #[test]
    fn idx_class_shortage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (ti, tl) = write_idx_fixture(dir.path(), "train", &[3, 50]);
        let (si, sl) = write_idx_fixture(dir.path(), "t10k", &[3, 20]);
        let spec = DatasetSpec::MnistIdx {
            train_images: ti,
            train_labels: tl,
            test_images: si,
            test_labels: sl,
            classes: vec![0, 1],
            train: 20,
            test: 4,
        };
        assert!(load_dataset(&spec, 3).is_err());
    }

    #[test]
    fn angle_scaler_maps_to_zero_pi() {
        let spec = DatasetSpec::SyntheticBlobs {
            classes: 2,
            dims: 5,
            train: 80,
            test: 20,
            cluster_std: 0.5,
            separation: 2.0,
        };
        let ds = load_dataset(&spec, 9).unwrap();
        let processed = preprocess(&ds, 3).unwrap();
        assert_eq!(processed.x_train.ncols(), 3);
        for &v in processed.x_train.iter() {
            assert!((0.0..=PI).contains(&v), "{v}");
        }
        // test values may leave [0, pi] but only slightly for blobs
        assert_eq!(processed.selected_features.len(), 3);
        let mut sorted = processed.selected_features.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
    }
}
