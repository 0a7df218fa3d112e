//! End-to-end pipeline: subgraph selection, dataset preprocessing, candidate
//! pool generation, PST/KTA labeling, surrogate training, prediction,
//! ranking, final kernel training and baselines.
//!
//! Every stage writes its artifact into the run directory (atomically:
//! temp-file-then-rename) and is skipped on re-runs when the artifact
//! already exists, so an interrupted run resumes where it stopped. All
//! randomness derives from `master_seed`, making the final report a pure
//! function of the configuration and dataset files.

pub mod baselines;
pub mod dataset;
pub mod timing;

pub use dataset::{load_dataset, preprocess, AngleScaler, Dataset, DatasetSpec, ProcessedDataset};

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::circuit::{assign_embedding, bind, generate_candidate, Circuit, PoolDoc};
use crate::device::{
    default_exclusion_budget, load_topology, select_subgraph, DeviceTopology, NoiseType, Subgraph,
};
use crate::error::{Error, Result};
use crate::featurize::{build_graph, CircuitGraph, GraphMode, GraphNormalizer, DEFAULT_QUBIT_WIDTH};
use crate::gnn::{predict_batch, r_squared, train, SurrogateModel, TrainConfig};
use crate::kernel::{
    cross_kernel, kernel_matrix, kta, svm_accuracy, svm_fit, train_kernel_params, LabelVector,
};
use crate::rng::derive_stream;
use crate::sim::{pst, NoiseModel};

/// Bound on re-generation attempts per pool slot when a candidate lacks
/// enough parameterized gates for the embedding.
const MAX_RESAMPLE_ATTEMPTS: u64 = 10;

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Subgraph,
    Dataset,
    Pool,
    Labels,
    Gnn,
    Predictions,
    Ranking,
    Final,
    Baselines,
}

/// Baselines the pipeline can evaluate alongside the chosen kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Random,
    Tek,
    Rbfk,
}

/// Full pipeline configuration (TOML-compatible).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Calibration document path.
    pub calibration: PathBuf,
    /// Subgraph size N.
    pub n_qubits: usize,
    /// Exclusion budget per noise type; `ceil(num_qubits / 10)` when absent.
    #[serde(default)]
    pub exclusion_budget: Option<usize>,
    /// Candidate pool size M.
    pub pool_size: usize,
    /// Gates per circuit P; `max(ceil(2.5 p), 30)` when absent.
    #[serde(default)]
    pub gates_per_circuit: Option<usize>,
    /// How many pool circuits get PST/KTA labels (the GNN dataset).
    pub label_sample: usize,
    #[serde(default = "default_keep_fraction")]
    pub pst_keep_fraction: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_kta_per_class")]
    pub kta_samples_per_class: usize,
    #[serde(default = "default_final_steps")]
    pub final_steps: usize,
    #[serde(default = "default_final_lr")]
    pub final_lr: f64,
    #[serde(default = "default_svm_c")]
    pub svm_c: f64,
    pub master_seed: u64,
    pub dataset: DatasetSpec,
    /// Embedding dimensionality p after feature selection.
    pub feature_dims: usize,
    #[serde(default)]
    pub gnn: TrainConfig,
    #[serde(default = "default_gnn_train_fraction")]
    pub gnn_train_fraction: f64,
    #[serde(default = "default_q_width")]
    pub q_width: usize,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<BaselineKind>,
}

fn default_keep_fraction() -> f64 {
    0.2
}
fn default_top_k() -> usize {
    10
}
fn default_kta_per_class() -> usize {
    10
}
fn default_final_steps() -> usize {
    100
}
fn default_final_lr() -> f64 {
    0.01
}
fn default_svm_c() -> f64 {
    1.0
}
fn default_gnn_train_fraction() -> f64 {
    0.8
}
fn default_q_width() -> usize {
    DEFAULT_QUBIT_WIDTH
}
fn default_baselines() -> Vec<BaselineKind> {
    vec![BaselineKind::Random, BaselineKind::Rbfk]
}

impl PipelineConfig {
    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    /// Effective gate budget P.
    pub fn effective_gates(&self) -> usize {
        self.gates_per_circuit
            .unwrap_or_else(|| ((2.5 * self.feature_dims as f64).ceil() as usize).max(30))
    }

    fn validate(&self) -> Result<()> {
        if self.label_sample > self.pool_size {
            return Err(Error::Invariant(format!(
                "label_sample {} exceeds pool_size {}",
                self.label_sample, self.pool_size
            )));
        }
        if !(0.0 < self.pst_keep_fraction && self.pst_keep_fraction <= 1.0) {
            return Err(Error::Invariant(
                "pst_keep_fraction must lie in (0, 1]".into(),
            ));
        }
        if !(0.0 < self.gnn_train_fraction && self.gnn_train_fraction < 1.0) {
            return Err(Error::Invariant(
                "gnn_train_fraction must lie in (0, 1)".into(),
            ));
        }
        if self.n_qubits > self.q_width {
            return Err(Error::Invariant(format!(
                "n_qubits {} exceeds the target-qubit feature width {}",
                self.n_qubits, self.q_width
            )));
        }
        Ok(())
    }
}

/// PST/KTA labels for the sampled circuits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelsDoc {
    pub sample_ids: Vec<usize>,
    pub rows: Vec<LabelRow>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LabelRow {
    pub id: usize,
    pub pst: f64,
    pub kta: f64,
}

/// Trained surrogates plus their evaluation on the held-out split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GnnStageDoc {
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub normalizer_fidelity: GraphNormalizer,
    pub normalizer_performance: GraphNormalizer,
    pub gnn_pst: SurrogateModel,
    pub gnn_kta: SurrogateModel,
    pub loss_pst: Vec<f64>,
    pub loss_kta: Vec<f64>,
    pub r2_pst: f64,
    pub r2_kta: f64,
}

/// Surrogate predictions over the full pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: usize,
    /// GNNs-1 output clamped to [0, 1] for reporting.
    pub pst_pred: f64,
    pub kta_pred: f64,
}

/// Ranking outcome: PST survivors, then the KTA top-k.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingDoc {
    pub survivors: Vec<usize>,
    pub selected: Vec<usize>,
}

/// Final-training result for one top-k candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalCandidate {
    pub id: usize,
    pub params: Vec<f64>,
    pub kta_history: Vec<f64>,
    pub final_train_kta: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalDoc {
    pub candidates: Vec<FinalCandidate>,
    pub chosen_id: usize,
    pub chosen_accuracy: f64,
}

/// Baseline accuracies (None when not requested).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BaselinesDoc {
    pub random_runs: Vec<f64>,
    pub random_mean: Option<f64>,
    pub tek: Option<f64>,
    pub rbfk: Option<f64>,
}

/// The deterministic run record (timings live in a separate artifact).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub subgraph_qubits: Vec<usize>,
    pub selected_features: Vec<usize>,
    pub r2_pst: f64,
    pub r2_kta: f64,
    pub predictions: Vec<PredictionRow>,
    pub top_k: Vec<FinalCandidate>,
    pub chosen_id: usize,
    pub chosen_accuracy: f64,
    pub baselines: BaselinesDoc,
}

/// Wall-clock seconds per executed stage; non-deterministic by nature and
/// therefore kept out of [`RunReport`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub stages: Vec<(String, f64)>,
}

/// A pipeline working directory with atomic artifact persistence.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(RunDir { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Serialize JSON to a temp file and rename it into place.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let tmp = self.root.join(format!("{name}.tmp"));
        std::fs::write(&tmp, serde_json::to_vec_pretty(value)?)?;
        std::fs::rename(&tmp, self.path(name))?;
        Ok(())
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let text = std::fs::read_to_string(self.path(name))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let tmp = self.root.join(format!("{name}.tmp"));
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, self.path(name))?;
        Ok(())
    }

    /// Load the artifact if present, otherwise compute and persist it.
    fn load_or_compute<T, F>(&self, name: &str, timings: &mut StageTimings, f: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        if self.path(name).exists() {
            return self.read_json(name);
        }
        let start = Instant::now();
        let value = f()?;
        timings
            .stages
            .push((name.trim_end_matches(".json").to_string(), start.elapsed().as_secs_f64()));
        self.write_json(name, &value)?;
        Ok(value)
    }
}

fn seed_for(master: u64, tag: &str, index: u64) -> u64 {
    derive_stream(master, tag, index).random()
}

/// Keep the top `keep_fraction` of the pool by predicted PST, then pick the
/// `top_k` highest predicted KTA among the survivors; all ties break toward
/// the lower circuit id.
pub fn rank_and_filter(
    predictions: &[PredictionRow],
    keep_fraction: f64,
    top_k: usize,
) -> Result<RankingDoc> {
    if predictions.is_empty() {
        return Err(Error::Invariant("no predictions to rank".into()));
    }
    let keep = ((keep_fraction * predictions.len() as f64).ceil() as usize)
        .clamp(1, predictions.len());
    if top_k > keep {
        return Err(Error::Invariant(format!(
            "top_k {top_k} exceeds the {keep} PST survivors"
        )));
    }
    let mut by_pst: Vec<&PredictionRow> = predictions.iter().collect();
    by_pst.sort_by(|a, b| {
        b.pst_pred
            .partial_cmp(&a.pst_pred)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    let mut survivors: Vec<&PredictionRow> = by_pst.into_iter().take(keep).collect();
    survivors.sort_by(|a, b| {
        b.kta_pred
            .partial_cmp(&a.kta_pred)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    let selected: Vec<usize> = survivors.iter().take(top_k).map(|r| r.id).collect();
    let mut survivor_ids: Vec<usize> = survivors.iter().map(|r| r.id).collect();
    survivor_ids.sort_unstable();
    Ok(RankingDoc {
        survivors: survivor_ids,
        selected,
    })
}

/// Generate the candidate pool with reject-and-resample for embedding
/// feasibility: a slot is retried (bounded) until its circuit carries at
/// least `p` parameterized gates.
pub fn generate_pool(
    subgraph: &Arc<Subgraph>,
    topology: &DeviceTopology,
    pool_size: usize,
    gates: usize,
    p_dims: usize,
    master_seed: u64,
) -> Result<Vec<Circuit>> {
    let mut circuits = Vec::with_capacity(pool_size);
    for id in 0..pool_size as u64 {
        let mut accepted = None;
        for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
            let mut rng = derive_stream(master_seed, "pool", id * MAX_RESAMPLE_ATTEMPTS + attempt);
            let candidate = generate_candidate(subgraph, &topology.gate_set, gates, &mut rng)?;
            if candidate.parameterized_positions().len() >= p_dims {
                accepted = Some(assign_embedding(&candidate, p_dims, &mut rng)?);
                break;
            }
        }
        circuits.push(accepted.ok_or_else(|| {
            Error::Infeasible(format!(
                "circuit {id}: no candidate with >= {p_dims} parameterized gates after \
                 {MAX_RESAMPLE_ATTEMPTS} attempts; raise gates_per_circuit"
            ))
        })?);
    }
    Ok(circuits)
}

/// Stratified per-class subset of the training data used for KTA labels.
pub fn kta_label_subset(
    data: &ProcessedDataset,
    per_class: usize,
    master_seed: u64,
) -> Result<(ndarray::Array2<f64>, LabelVector)> {
    use rand::seq::SliceRandom;
    let mut rng = derive_stream(master_seed, "kta-subset", 0);
    let mut picked: Vec<usize> = Vec::new();
    for class in 0..data.num_classes {
        let mut members: Vec<usize> = data
            .y_train
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < per_class {
            return Err(Error::Invariant(format!(
                "class {class} has {} training samples, {per_class} needed for KTA labels",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        picked.extend(members.into_iter().take(per_class));
    }
    let mut x = ndarray::Array2::zeros((picked.len(), data.x_train.ncols()));
    let mut y = Vec::with_capacity(picked.len());
    for (row, &idx) in picked.iter().enumerate() {
        for c in 0..data.x_train.ncols() {
            x[[row, c]] = data.x_train[[idx, c]];
        }
        y.push(data.y_train[idx]);
    }
    Ok((x, LabelVector::new(y, data.num_classes)?))
}

/// PST and KTA labels for a set of circuits.
///
/// PST: noisy echo-circuit simulation with all slots bound to random angles
/// seeded by circuit id. KTA: noiseless kernel on the stratified subset at
/// random trainable angles, likewise seeded. Both are bitwise reproducible.
pub fn label_pool(
    circuits: &[(usize, &Circuit)],
    noise: &NoiseModel,
    kta_data: &ndarray::Array2<f64>,
    kta_labels: &LabelVector,
    master_seed: u64,
) -> Result<Vec<LabelRow>> {
    let mut rows = Vec::with_capacity(circuits.len());
    for &(id, circuit) in circuits {
        let mut pst_rng = derive_stream(master_seed, "pst-angles", id as u64);
        let embed: Vec<f64> = (0..circuit.embed_dims())
            .map(|_| pst_rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let params: Vec<f64> = (0..circuit.num_trainable)
            .map(|_| pst_rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let bound = bind(circuit, &embed, &params)?;
        let pst_value = pst(&bound, noise)?;

        let mut kta_rng = derive_stream(master_seed, "kta-params", id as u64);
        let kta_params: Vec<f64> = (0..circuit.num_trainable)
            .map(|_| kta_rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let kernel = kernel_matrix(circuit, &kta_params, kta_data)?;
        // quantum kernels must come out PSD with unit diagonal
        for i in 0..kernel.order() {
            if (kernel.entries[[i, i]] - 1.0).abs() > 1e-9 {
                return Err(Error::Numerical(format!(
                    "circuit {id}: kernel diagonal {} at {i}",
                    kernel.entries[[i, i]]
                )));
            }
        }
        let min_eig = crate::linalg::min_eigenvalue(&kernel.entries);
        if min_eig < -1e-9 {
            return Err(Error::Numerical(format!(
                "circuit {id}: kernel eigenvalue {min_eig}"
            )));
        }
        let kta_value = kta(&kernel, kta_labels)?;
        rows.push(LabelRow {
            id,
            pst: pst_value,
            kta: kta_value,
        });
    }
    Ok(rows)
}

fn build_mode_graphs(
    circuits: &[(usize, &Circuit)],
    topology: &DeviceTopology,
    mode: GraphMode,
    q_width: usize,
) -> Result<Vec<CircuitGraph>> {
    circuits
        .iter()
        .map(|(_, c)| build_graph(c, topology, mode, q_width))
        .collect()
}

fn predictions_csv(rows: &[PredictionRow]) -> String {
    let mut out = String::from("id,pst_pred,kta_pred\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.id, r.pst_pred, r.kta_pred));
    }
    out
}

fn report_csvs(report: &RunReport, timings: &StageTimings, dir: &RunDir) -> Result<()> {
    let mut topk = String::from("id,final_train_kta,test_accuracy\n");
    for c in &report.top_k {
        topk.push_str(&format!("{},{},{}\n", c.id, c.final_train_kta, c.test_accuracy));
    }
    dir.write_text("report_topk.csv", &topk)?;

    let mut base = String::from("baseline,accuracy\n");
    base.push_str(&format!("chosen,{}\n", report.chosen_accuracy));
    if let Some(v) = report.baselines.random_mean {
        base.push_str(&format!("random-mean,{v}\n"));
    }
    if let Some(v) = report.baselines.tek {
        base.push_str(&format!("tek,{v}\n"));
    }
    if let Some(v) = report.baselines.rbfk {
        base.push_str(&format!("rbfk,{v}\n"));
    }
    dir.write_text("report_baselines.csv", &base)?;

    let mut times = String::from("stage,seconds\n");
    for (stage, secs) in &timings.stages {
        times.push_str(&format!("{stage},{secs}\n"));
    }
    dir.write_text("report_timings.csv", &times)?;
    Ok(())
}

/// Run the full pipeline in `run_dir`, resuming from existing artifacts.
pub fn run_pipeline(cfg: &PipelineConfig, run_dir: impl AsRef<Path>) -> Result<RunReport> {
    run_pipeline_until(cfg, run_dir, None)?
        .ok_or_else(|| Error::Invariant("pipeline stopped before completion".into()))
}

/// Run the pipeline, optionally stopping after a stage (used to exercise
/// checkpoint/resume behaviour).
pub fn run_pipeline_until(
    cfg: &PipelineConfig,
    run_dir: impl AsRef<Path>,
    stop_after: Option<Stage>,
) -> Result<Option<RunReport>> {
    cfg.validate()?;
    let dir = RunDir::new(run_dir.as_ref())?;
    let mut timings = StageTimings::default();

    // config echo guards against mixing artifacts from different configs
    let echo_name = "config.json";
    if dir.path(echo_name).exists() {
        let existing: serde_json::Value = dir.read_json(echo_name)?;
        let current = serde_json::to_value(cfg)?;
        if existing != current {
            return Err(Error::Invariant(
                "run directory holds artifacts for a different configuration".into(),
            ));
        }
    } else {
        dir.write_json(echo_name, cfg)?;
    }

    macro_rules! stage_done {
        ($stage:expr) => {
            if stop_after == Some($stage) {
                dir.write_json("timings.json", &timings)?;
                return Ok(None);
            }
        };
    }

    let topology = load_topology(&cfg.calibration).map_err(|e| e.in_stage("subgraph"))?;
    let subgraph: Subgraph = dir
        .load_or_compute("subgraph.json", &mut timings, || {
            let e_xc = cfg
                .exclusion_budget
                .unwrap_or_else(|| default_exclusion_budget(topology.num_qubits));
            select_subgraph(&topology, cfg.n_qubits, e_xc, &NoiseType::default_order())
        })
        .map_err(|e| e.in_stage("subgraph"))?;
    stage_done!(Stage::Subgraph);

    let data: ProcessedDataset = dir
        .load_or_compute("dataset.json", &mut timings, || {
            let raw = load_dataset(&cfg.dataset, cfg.master_seed)?;
            preprocess(&raw, cfg.feature_dims)
        })
        .map_err(|e| e.in_stage("dataset"))?;
    stage_done!(Stage::Dataset);

    let subgraph = Arc::new(subgraph);
    let pool_doc: PoolDoc = dir
        .load_or_compute("pool.json", &mut timings, || {
            let circuits = generate_pool(
                &subgraph,
                &topology,
                cfg.pool_size,
                cfg.effective_gates(),
                cfg.feature_dims,
                cfg.master_seed,
            )?;
            Ok(PoolDoc::from_circuits(&subgraph, &circuits))
        })
        .map_err(|e| e.in_stage("pool"))?;
    let (pool_subgraph, pool) = pool_doc.into_circuits().map_err(|e| e.in_stage("pool"))?;
    stage_done!(Stage::Pool);

    let labels: LabelsDoc = dir
        .load_or_compute("labels.json", &mut timings, || {
            let mut sample_rng = derive_stream(cfg.master_seed, "label-sample", 0);
            let mut sample_ids: Vec<usize> =
                rand::seq::index::sample(&mut sample_rng, cfg.pool_size, cfg.label_sample)
                    .into_vec();
            sample_ids.sort_unstable();
            let noise = NoiseModel::from_calibration(&topology, &pool_subgraph, Default::default())?;
            let (kta_data, kta_labels) =
                kta_label_subset(&data, cfg.kta_samples_per_class, cfg.master_seed)?;
            let selected: Vec<(usize, &Circuit)> =
                sample_ids.iter().map(|&id| (id, &pool[id])).collect();
            let rows = label_pool(&selected, &noise, &kta_data, &kta_labels, cfg.master_seed)?;
            Ok(LabelsDoc { sample_ids, rows })
        })
        .map_err(|e| e.in_stage("labels"))?;
    stage_done!(Stage::Labels);

    let gnn_stage: GnnStageDoc = dir
        .load_or_compute("gnn.json", &mut timings, || {
            let sampled: Vec<(usize, &Circuit)> = labels
                .sample_ids
                .iter()
                .map(|&id| (id, &pool[id]))
                .collect();
            let fid_graphs = build_mode_graphs(&sampled, &topology, GraphMode::Fidelity, cfg.q_width)?;
            let perf_graphs =
                build_mode_graphs(&sampled, &topology, GraphMode::Performance, cfg.q_width)?;

            // shuffled train/test split of the labeled sample
            use rand::seq::SliceRandom;
            let mut split_rng = derive_stream(cfg.master_seed, "gnn-split", 0);
            let mut order: Vec<usize> = (0..sampled.len()).collect();
            order.shuffle(&mut split_rng);
            let train_n = ((sampled.len() as f64) * cfg.gnn_train_fraction).round() as usize;
            let train_n = train_n.clamp(1, sampled.len() - 1);
            let (train_part, test_part) = order.split_at(train_n);

            let norm_fid = GraphNormalizer::fit(
                &train_part.iter().map(|&i| &fid_graphs[i]).collect::<Vec<_>>(),
            )?;
            let norm_perf = GraphNormalizer::fit(
                &train_part.iter().map(|&i| &perf_graphs[i]).collect::<Vec<_>>(),
            )?;

            let make_set = |idx: &[usize], graphs: &[CircuitGraph], norm: &GraphNormalizer, pick_pst: bool|
             -> Result<Vec<(CircuitGraph, f64)>> {
                idx.iter()
                    .map(|&i| {
                        let g = norm.apply(&graphs[i])?;
                        let row = labels.rows[i];
                        Ok((g, if pick_pst { row.pst } else { row.kta }))
                    })
                    .collect()
            };
            let pst_train = make_set(train_part, &fid_graphs, &norm_fid, true)?;
            let pst_test = make_set(test_part, &fid_graphs, &norm_fid, true)?;
            let kta_train = make_set(train_part, &perf_graphs, &norm_perf, false)?;
            let kta_test = make_set(test_part, &perf_graphs, &norm_perf, false)?;

            let mut gnn_pst = SurrogateModel::new(cfg.q_width, seed_for(cfg.master_seed, "gnn1-init", 0));
            let mut cfg1 = cfg.gnn;
            cfg1.seed = seed_for(cfg.master_seed, "gnn1-shuffle", 0);
            let loss_pst = train(&mut gnn_pst, &pst_train, &cfg1)?;

            let mut gnn_kta = SurrogateModel::new(cfg.q_width, seed_for(cfg.master_seed, "gnn2-init", 0));
            let mut cfg2 = cfg.gnn;
            cfg2.seed = seed_for(cfg.master_seed, "gnn2-shuffle", 0);
            let loss_kta = train(&mut gnn_kta, &kta_train, &cfg2)?;

            let eval = |model: &SurrogateModel, set: &[(CircuitGraph, f64)]| -> Result<f64> {
                let graphs: Vec<CircuitGraph> = set.iter().map(|(g, _)| g.clone()).collect();
                let targets: Vec<f64> = set.iter().map(|(_, t)| *t).collect();
                let preds = predict_batch(model, &graphs)?;
                r_squared(&preds, &targets)
            };
            let r2_pst = eval(&gnn_pst, &pst_test)?;
            let r2_kta = eval(&gnn_kta, &kta_test)?;

            Ok(GnnStageDoc {
                train_ids: train_part.iter().map(|&i| labels.sample_ids[i]).collect(),
                test_ids: test_part.iter().map(|&i| labels.sample_ids[i]).collect(),
                normalizer_fidelity: norm_fid,
                normalizer_performance: norm_perf,
                gnn_pst,
                gnn_kta,
                loss_pst,
                loss_kta,
                r2_pst,
                r2_kta,
            })
        })
        .map_err(|e| e.in_stage("gnn"))?;
    stage_done!(Stage::Gnn);

    let predictions: Vec<PredictionRow> = dir
        .load_or_compute("predictions.json", &mut timings, || {
            let all: Vec<(usize, &Circuit)> = pool.iter().enumerate().map(|(i, c)| (i, c)).collect();
            let fid = build_mode_graphs(&all, &topology, GraphMode::Fidelity, cfg.q_width)?;
            let perf = build_mode_graphs(&all, &topology, GraphMode::Performance, cfg.q_width)?;
            let mut rows = Vec::with_capacity(pool.len());
            for i in 0..pool.len() {
                let gf = gnn_stage.normalizer_fidelity.apply(&fid[i])?;
                let gp = gnn_stage.normalizer_performance.apply(&perf[i])?;
                let pst_pred = gnn_stage.gnn_pst.forward(&gf)?.clamp(0.0, 1.0);
                let kta_pred = gnn_stage.gnn_kta.forward(&gp)?;
                rows.push(PredictionRow {
                    id: i,
                    pst_pred,
                    kta_pred,
                });
            }
            Ok(rows)
        })
        .map_err(|e| e.in_stage("predictions"))?;
    dir.write_text("predictions.csv", &predictions_csv(&predictions))?;
    stage_done!(Stage::Predictions);

    let ranking: RankingDoc = dir
        .load_or_compute("ranking.json", &mut timings, || {
            rank_and_filter(&predictions, cfg.pst_keep_fraction, cfg.top_k)
        })
        .map_err(|e| e.in_stage("ranking"))?;
    stage_done!(Stage::Ranking);

    let final_doc: FinalDoc = dir
        .load_or_compute("final.json", &mut timings, || {
            let y_train = LabelVector::new(data.y_train.clone(), data.num_classes)?;
            let y_test = LabelVector::new(data.y_test.clone(), data.num_classes)?;
            let mut candidates = Vec::with_capacity(ranking.selected.len());
            for &id in &ranking.selected {
                let circuit = &pool[id];
                let outcome = train_kernel_params(
                    circuit,
                    &data.x_train,
                    &y_train,
                    cfg.final_steps,
                    cfg.final_lr,
                    seed_for(cfg.master_seed, "final-init", id as u64),
                )?;
                let k_train = kernel_matrix(circuit, &outcome.params, &data.x_train)?;
                let final_train_kta = kta(&k_train, &y_train)?;
                let model = svm_fit(&k_train, &y_train, cfg.svm_c)?;
                let k_test = cross_kernel(circuit, &outcome.params, &data.x_test, &data.x_train)?;
                let test_accuracy = svm_accuracy(&model, &k_test, &y_test)?;
                candidates.push(FinalCandidate {
                    id,
                    params: outcome.params,
                    kta_history: outcome.kta_history,
                    final_train_kta,
                    test_accuracy,
                });
            }
            let chosen = candidates
                .iter()
                .max_by(|a, b| {
                    a.test_accuracy
                        .partial_cmp(&b.test_accuracy)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then_with(|| b.id.cmp(&a.id))
                })
                .ok_or_else(|| Error::Invariant("no top-k candidates".into()))?;
            let (chosen_id, chosen_accuracy) = (chosen.id, chosen.test_accuracy);
            Ok(FinalDoc {
                candidates,
                chosen_id,
                chosen_accuracy,
            })
        })
        .map_err(|e| e.in_stage("final"))?;
    stage_done!(Stage::Final);

    let baselines_doc: BaselinesDoc = dir
        .load_or_compute("baselines.json", &mut timings, || {
            baselines::run_baselines(
                cfg,
                &topology,
                &pool_subgraph,
                &data,
                &cfg.baselines,
            )
        })
        .map_err(|e| e.in_stage("baselines"))?;
    stage_done!(Stage::Baselines);

    let report = RunReport {
        config: cfg.clone(),
        subgraph_qubits: pool_subgraph.qubit_ids.clone(),
        selected_features: data.selected_features.clone(),
        r2_pst: gnn_stage.r2_pst,
        r2_kta: gnn_stage.r2_kta,
        predictions,
        top_k: final_doc.candidates.clone(),
        chosen_id: final_doc.chosen_id,
        chosen_accuracy: final_doc.chosen_accuracy,
        baselines: baselines_doc,
    };
    dir.write_json("report.json", &report)?;
    dir.write_json("timings.json", &timings)?;
    report_csvs(&report, &timings, &dir)?;
    Ok(Some(report))
}

/// Evaluate baselines without running the full pipeline: only the subgraph
/// and dataset stages are computed (or reused from the run directory).
pub fn run_baselines_standalone(
    cfg: &PipelineConfig,
    run_dir: impl AsRef<Path>,
    which: &[BaselineKind],
) -> Result<BaselinesDoc> {
    cfg.validate()?;
    let dir = RunDir::new(run_dir.as_ref())?;
    let mut timings = StageTimings::default();
    let topology = load_topology(&cfg.calibration)?;
    let subgraph: Subgraph = dir.load_or_compute("subgraph.json", &mut timings, || {
        let e_xc = cfg
            .exclusion_budget
            .unwrap_or_else(|| default_exclusion_budget(topology.num_qubits));
        select_subgraph(&topology, cfg.n_qubits, e_xc, &NoiseType::default_order())
    })?;
    let data: ProcessedDataset = dir.load_or_compute("dataset.json", &mut timings, || {
        let raw = load_dataset(&cfg.dataset, cfg.master_seed)?;
        preprocess(&raw, cfg.feature_dims)
    })?;
    let doc = baselines::run_baselines(cfg, &topology, &Arc::new(subgraph), &data, which)?;
    dir.write_json("baselines.json", &doc)?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_filter_examples() {
        let rows: Vec<PredictionRow> = (0..10)
            .map(|id| PredictionRow {
                id,
                pst_pred: 1.0 - 0.05 * id as f64,
                kta_pred: 0.1 * id as f64,
            })
            .collect();
        // keep_fraction 1.0 reduces to pure KTA top-k
        let r = rank_and_filter(&rows, 1.0, 3).unwrap();
        assert_eq!(r.selected, vec![9, 8, 7]);
        // k = pool size with keep 1.0 is the identity selection
        let r = rank_and_filter(&rows, 1.0, 10).unwrap();
        assert_eq!(r.selected.len(), 10);
        let mut all: Vec<usize> = r.selected.clone();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        // top_k above survivor count is an error
        assert!(rank_and_filter(&rows, 0.2, 3).is_err());
    }

    #[test]
    fn best_kta_with_terrible_pst_is_excluded() {
        // circuit 0 has the globally best KTA but bottom-decile PST
        let mut rows: Vec<PredictionRow> = (0..20)
            .map(|id| PredictionRow {
                id,
                pst_pred: 0.5 + 0.02 * id as f64,
                kta_pred: 0.01 * id as f64,
            })
            .collect();
        rows[0].kta_pred = 0.99;
        rows[0].pst_pred = 0.01;
        let r = rank_and_filter(&rows, 0.2, 2).unwrap();
        assert!(!r.selected.contains(&0), "{:?}", r.selected);
        assert!(!r.survivors.contains(&0));
    }

    #[test]
    fn ties_break_by_lower_id() {
        let rows: Vec<PredictionRow> = (0..6)
            .map(|id| PredictionRow {
                id,
                pst_pred: 0.9,
                kta_pred: 0.5,
            })
            .collect();
        let r = rank_and_filter(&rows, 0.5, 2).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
    }

    #[test]
    fn config_defaults_fill_in() {
        let toml_text = r#"
calibration = "calib.json"
n_qubits = 4
pool_size = 100
label_sample = 50
master_seed = 7
feature_dims = 14

[dataset]
kind = "synthetic-blobs"
classes = 2
dims = 14
train = 200
test = 60
"#;
        let cfg: PipelineConfig = toml::from_str(toml_text).unwrap();
        assert_eq!(cfg.pst_keep_fraction, 0.2);
        assert_eq!(cfg.top_k, 10);
        assert_eq!(cfg.kta_samples_per_class, 10);
        assert_eq!(cfg.effective_gates(), 35);
        assert_eq!(cfg.gnn.batch, 512);
        assert_eq!(cfg.gnn.epochs, 200);
        assert_eq!(cfg.q_width, 16);
        assert_eq!(
            cfg.baselines,
            vec![BaselineKind::Random, BaselineKind::Rbfk]
        );
    }
}
