//! Hardware-aware quantum kernel design toolkit.
//!
//! The crate covers the full workflow for building task-specific quantum
//! kernels on noisy devices:
//!
//! 1. [`device`] — device topology + calibration data and low-noise subgraph
//!    selection.
//! 2. [`circuit`] — hardware-native candidate circuit generation with
//!    noise-weighted 2-qubit gate placement and randomized data embedding.
//! 3. [`sim`] — statevector and density-matrix simulation with
//!    calibration-derived noise channels; PST fidelity labels.
//! 4. [`featurize`] — circuit → DAG conversion with per-node feature vectors
//!    (fidelity and performance flavours) and min-max normalization.
//! 5. [`gnn`] — graph-attention surrogate models predicting PST and KTA.
//! 6. [`kernel`] — quantum/RBF kernel matrices, kernel-target alignment,
//!    SMO-based SVMs and KTA-driven parameter training.
//! 7. [`feature_select`] — mRMR dimensionality reduction.
//! 8. [`pipeline`] — end-to-end orchestration, datasets, baselines, reports.

pub mod circuit;
pub mod device;
pub mod error;
pub mod feature_select;
pub mod featurize;
pub mod gnn;
pub mod kernel;
pub mod linalg;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
