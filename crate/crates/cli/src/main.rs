//! `qkforge`: design quantum kernels for noisy devices.
//!
//! Subcommands cover the full workflow: subgraph selection and calibration
//! reports, candidate generation, PST/KTA labeling, surrogate training,
//! prediction and ranking, final kernel training, baselines, and the
//! end-to-end pipeline. Stage verbs share a run directory and reuse each
//! other's artifacts.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ndarray::Array2;

use qkforge_core::circuit::PoolDoc;
use qkforge_core::device::{
    calib_report, default_exclusion_budget, load_subgraph, load_topology, report_to_csv,
    select_subgraph, NoiseType,
};
use qkforge_core::feature_select::mrmr_select;
use qkforge_core::kernel::{train_kernel_params, LabelVector};
use qkforge_core::pipeline::{
    self, run_baselines_standalone, run_pipeline, run_pipeline_until, timing, BaselineKind,
    PipelineConfig, Stage,
};
use qkforge_core::rng::derive_stream;

#[derive(Parser)]
#[command(name = "qkforge", version, about = "Hardware-aware quantum kernel design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a low-noise connected subgraph from a calibration document.
    Subgraph {
        #[arg(long)]
        calib: PathBuf,
        /// Subgraph size N.
        #[arg(long)]
        n: usize,
        /// Exclusion budget per noise type (default: num_qubits / 10, rounded up).
        #[arg(long)]
        exclude: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a descending error table for one noise type as CSV.
    CalibReport {
        #[arg(long)]
        calib: PathBuf,
        /// Noise type: 1q, readout, 2q, or a gate name (rx, rz, x, ...).
        #[arg(long, name = "type")]
        noise_type: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a candidate circuit pool over a subgraph.
    Gen {
        #[arg(long)]
        subgraph: PathBuf,
        /// Calibration document providing the native gate set.
        #[arg(long)]
        calib: PathBuf,
        /// Pool size M.
        #[arg(long)]
        count: usize,
        /// Gates per circuit P.
        #[arg(long)]
        gates: usize,
        /// Embedding dimensionality (0 leaves all parameterized gates trainable).
        #[arg(long, default_value_t = 0)]
        embed: usize,
        #[arg(long)]
        seed: u64,
        /// Output directory (pool.json is written inside).
        #[arg(long)]
        out: PathBuf,
    },
    /// mRMR feature selection on a CSV (features..., label in the last column).
    SelectFeatures {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the trainable angles of one pool circuit by KTA ascent.
    TrainKernel {
        /// Pool document holding the circuit.
        #[arg(long)]
        circuit: PathBuf,
        /// Circuit id within the pool.
        #[arg(long, default_value_t = 0)]
        id: usize,
        /// CSV of embedding-scaled features with the label in the last column.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run pipeline stages up to labeling.
    Label(StageArgs),
    /// Train the PST/KTA surrogates (runs stages up to the GNN stage).
    TrainGnn {
        #[command(flatten)]
        stage: StageArgs,
        /// Which surrogate's metrics to print: 1 (PST) or 2 (KTA).
        #[arg(long)]
        which: Option<u8>,
    },
    /// Predict PST/KTA over the full pool.
    Predict(StageArgs),
    /// Rank candidates: PST survivors, then KTA top-k.
    Rank(StageArgs),
    /// Evaluate baselines (random / tek / rbfk) for a configuration.
    Baseline {
        #[command(flatten)]
        stage: StageArgs,
        /// Comma-separated subset of random,tek,rbfk.
        #[arg(long, default_value = "random,rbfk")]
        which: String,
    },
    /// Run the full pipeline and print the report summary.
    Pipeline {
        #[command(flatten)]
        stage: StageArgs,
        /// Stop after a stage (for checkpoint inspection).
        #[arg(long)]
        stop_after: Option<String>,
    },
    /// Measure GNN-prediction vs direct-calculation speedups.
    Speedup {
        #[arg(long)]
        calib: PathBuf,
        #[arg(long, default_value_t = 7)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        circuits: usize,
        #[arg(long, default_value_t = 14)]
        features: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 10)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic calibration fixture.
    Fixture {
        /// torino-like (133 qubits) or perth-like (7 qubits).
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct StageArgs {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Run directory for artifacts and checkpoints.
    #[arg(long)]
    run_dir: PathBuf,
    /// Override the master seed from the config.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Override the pool size from the config.
    #[arg(long)]
    pool_size: Option<usize>,
}

impl StageArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::from_toml_path(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.master_seed {
            cfg.master_seed = seed;
        }
        if let Some(pool) = self.pool_size {
            cfg.pool_size = pool;
        }
        Ok(cfg)
    }
}

fn read_labeled_csv(path: &PathBuf) -> Result<(Array2<f64>, Vec<usize>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut vals: Vec<f64> = record
            .iter()
            .map(|c| c.trim().parse::<f64>().context("non-numeric CSV cell"))
            .collect::<Result<Vec<_>>>()?;
        let label = vals
            .pop()
            .context("empty CSV row")?;
        labels.push(label.round() as usize);
        rows.push(vals);
    }
    if rows.is_empty() {
        bail!("no data rows in {}", path.display());
    }
    let cols = rows[0].len();
    let mut x = Array2::zeros((rows.len(), cols));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            bail!("ragged CSV row {i}");
        }
        for (j, v) in row.iter().enumerate() {
            x[[i, j]] = *v;
        }
    }
    Ok((x, labels))
}

fn parse_stage(name: &str) -> Result<Stage> {
    Ok(match name {
        "subgraph" => Stage::Subgraph,
        "dataset" => Stage::Dataset,
        "pool" => Stage::Pool,
        "labels" => Stage::Labels,
        "gnn" => Stage::Gnn,
        "predictions" => Stage::Predictions,
        "ranking" => Stage::Ranking,
        "final" => Stage::Final,
        "baselines" => Stage::Baselines,
        other => bail!("unknown stage '{other}'"),
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Subgraph {
            calib,
            n,
            exclude,
            out,
        } => {
            let topo = load_topology(&calib)?;
            let e_xc = exclude.unwrap_or_else(|| default_exclusion_budget(topo.num_qubits));
            let sub = select_subgraph(&topo, n, e_xc, &NoiseType::default_order())?;
            std::fs::write(&out, sub.to_json()?)?;
            println!(
                "selected qubits {:?} with {} edges -> {}",
                sub.qubit_ids,
                sub.edges.len(),
                out.display()
            );
        }
        Command::CalibReport {
            calib,
            noise_type,
            out,
        } => {
            let topo = load_topology(&calib)?;
            let nt = NoiseType::from_str(&noise_type)?;
            let rows = calib_report(&topo, nt)?;
            std::fs::write(&out, report_to_csv(&rows))?;
            println!("{} rows -> {}", rows.len(), out.display());
        }
        Command::Gen {
            subgraph,
            calib,
            count,
            gates,
            embed,
            seed,
            out,
        } => {
            let sub = Arc::new(load_subgraph(&subgraph)?);
            let topo = load_topology(&calib)?;
            let mut circuits = Vec::with_capacity(count);
            for id in 0..count as u64 {
                let mut rng = derive_stream(seed, "pool", id * 10);
                let mut c = qkforge_core::circuit::generate_candidate(
                    &sub,
                    &topo.gate_set,
                    gates,
                    &mut rng,
                )?;
                if embed > 0 {
                    let mut attempt = 1u64;
                    while c.parameterized_positions().len() < embed {
                        if attempt >= 10 {
                            bail!("circuit {id}: not enough parameterized gates for --embed {embed}; raise --gates");
                        }
                        let mut retry = derive_stream(seed, "pool", id * 10 + attempt);
                        c = qkforge_core::circuit::generate_candidate(
                            &sub,
                            &topo.gate_set,
                            gates,
                            &mut retry,
                        )?;
                        attempt += 1;
                    }
                    c = qkforge_core::circuit::assign_embedding(&c, embed, &mut rng)?;
                }
                circuits.push(c);
            }
            std::fs::create_dir_all(&out)?;
            let doc = PoolDoc::from_circuits(&sub, &circuits);
            let path = out.join("pool.json");
            std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
            println!("{count} circuits -> {}", path.display());
        }
        Command::SelectFeatures { data, p, out } => {
            let (x, y) = read_labeled_csv(&data)?;
            let result = mrmr_select(&x, &y, p)?;
            std::fs::write(&out, serde_json::to_string_pretty(&result)?)?;
            println!("selected {:?} -> {}", result.selected, out.display());
        }
        Command::TrainKernel {
            circuit,
            id,
            data,
            steps,
            lr,
            seed,
            out,
        } => {
            let doc: PoolDoc = serde_json::from_str(&std::fs::read_to_string(&circuit)?)?;
            let (_, circuits) = doc.into_circuits()?;
            let target = circuits
                .get(id)
                .with_context(|| format!("pool has no circuit {id}"))?;
            let (x, y) = read_labeled_csv(&data)?;
            let labels = LabelVector::infer(y)?;
            let outcome = train_kernel_params(target, &x, &labels, steps, lr, seed)?;
            std::fs::write(
                &out,
                serde_json::to_string_pretty(&serde_json::json!({
                    "params": outcome.params,
                    "kta_history": outcome.kta_history,
                }))?,
            )?;
            let last = outcome.kta_history.last().copied().unwrap_or(f64::NAN);
            println!(
                "{} trainable angles, KTA {:.4} -> {}",
                outcome.params.len(),
                last,
                out.display()
            );
        }
        Command::Label(stage) => {
            let cfg = stage.load()?;
            run_pipeline_until(&cfg, &stage.run_dir, Some(Stage::Labels))?;
            println!("labels written under {}", stage.run_dir.display());
        }
        Command::TrainGnn { stage, which } => {
            let cfg = stage.load()?;
            run_pipeline_until(&cfg, &stage.run_dir, Some(Stage::Gnn))?;
            let doc: pipeline::GnnStageDoc = serde_json::from_str(&std::fs::read_to_string(
                stage.run_dir.join("gnn.json"),
            )?)?;
            match which {
                Some(1) => println!("GNNs-1 (PST): R^2 = {:.4}", doc.r2_pst),
                Some(2) => println!("GNNs-2 (KTA): R^2 = {:.4}", doc.r2_kta),
                _ => println!(
                    "GNNs-1 (PST): R^2 = {:.4}; GNNs-2 (KTA): R^2 = {:.4}",
                    doc.r2_pst, doc.r2_kta
                ),
            }
        }
        Command::Predict(stage) => {
            let cfg = stage.load()?;
            run_pipeline_until(&cfg, &stage.run_dir, Some(Stage::Predictions))?;
            println!(
                "predictions -> {}",
                stage.run_dir.join("predictions.csv").display()
            );
        }
        Command::Rank(stage) => {
            let cfg = stage.load()?;
            run_pipeline_until(&cfg, &stage.run_dir, Some(Stage::Ranking))?;
            let doc: pipeline::RankingDoc = serde_json::from_str(&std::fs::read_to_string(
                stage.run_dir.join("ranking.json"),
            )?)?;
            println!(
                "{} survivors, top-k {:?}",
                doc.survivors.len(),
                doc.selected
            );
        }
        Command::Baseline { stage, which } => {
            let cfg = stage.load()?;
            let kinds = which
                .split(',')
                .map(|s| match s.trim() {
                    "random" => Ok(BaselineKind::Random),
                    "tek" => Ok(BaselineKind::Tek),
                    "rbfk" => Ok(BaselineKind::Rbfk),
                    other => bail!("unknown baseline '{other}'"),
                })
                .collect::<Result<Vec<_>>>()?;
            let doc = run_baselines_standalone(&cfg, &stage.run_dir, &kinds)?;
            if let Some(v) = doc.random_mean {
                println!("random mean accuracy: {v:.4}");
            }
            if let Some(v) = doc.tek {
                println!("tek accuracy: {v:.4}");
            }
            if let Some(v) = doc.rbfk {
                println!("rbfk accuracy: {v:.4}");
            }
        }
        Command::Pipeline { stage, stop_after } => {
            let cfg = stage.load()?;
            match stop_after {
                Some(name) => {
                    let until = parse_stage(&name)?;
                    run_pipeline_until(&cfg, &stage.run_dir, Some(until))?;
                    println!("stopped after stage '{name}'");
                }
                None => {
                    let report = run_pipeline(&cfg, &stage.run_dir)?;
                    println!(
                        "R^2(PST) = {:.4}, R^2(KTA) = {:.4}",
                        report.r2_pst, report.r2_kta
                    );
                    println!(
                        "chosen circuit {} with test accuracy {:.4}",
                        report.chosen_id, report.chosen_accuracy
                    );
                    if let Some(v) = report.baselines.random_mean {
                        println!("random baseline mean: {v:.4}");
                    }
                    if let Some(v) = report.baselines.tek {
                        println!("tek baseline: {v:.4}");
                    }
                    if let Some(v) = report.baselines.rbfk {
                        println!("rbfk baseline: {v:.4}");
                    }
                    println!("report -> {}", stage.run_dir.join("report.json").display());
                }
            }
        }
        Command::Speedup {
            calib,
            n,
            circuits,
            features,
            classes,
            per_class,
            seed,
        } => {
            let topo = load_topology(&calib)?;
            let cfg = timing::SpeedupConfig {
                n_qubits: n,
                circuits,
                feature_dims: features,
                classes,
                kta_samples_per_class: per_class,
                seed,
            };
            let report = timing::speedup_harness(&topo, &cfg)?;
            println!("per-circuit means over {} circuits at N={}:", report.circuits, report.n_qubits);
            println!("  gnn prediction:   {:.6} s", report.gnn_mean_s);
            println!(
                "  pst direct:       {:.6} s ({:.0}x)",
                report.pst_direct_mean_s, report.pst_speedup
            );
            println!(
                "  kta direct:       {:.6} s ({:.0}x)",
                report.kta_direct_mean_s, report.kta_speedup
            );
            println!(
                "  kta cached-state: {:.6} s ({:.0}x)",
                report.kta_cached_mean_s,
                report.kta_cached_mean_s / report.gnn_mean_s
            );
        }
        Command::Fixture { kind, out } => {
            let topo = match kind.as_str() {
                "torino-like" => qkforge_core::device::fixtures::torino_like().topology,
                "perth-like" => qkforge_core::device::fixtures::perth_like(),
                other => bail!("unknown fixture '{other}' (use torino-like or perth-like)"),
            };
            std::fs::write(&out, topo.to_json()?)?;
            println!(
                "{} ({} qubits, gate set {:?}) -> {}",
                topo.name,
                topo.num_qubits,
                topo.gate_set.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
                out.display()
            );
        }
    }
    Ok(())
}
