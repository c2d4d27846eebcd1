//! Fixed-budget depth/width grids, mini-batch SGD to a target, step-size
//! tuning, batch-size sweeps and diversity traces.
//!
//! Training starts from N(0, 1/K_{ℓ-1}) weights. Classification uses
//! `d_out` output units and square loss on one-hot targets. Metrics are
//! measured on the training set. Tuning epochs are not counted in
//! epochs-to-target.

mod budget;
mod data;
mod idx;
mod sweep;
mod train;

pub use budget::{solve_width, ParamBudget};
pub use data::{make_synthetic, make_synthetic_with, SyntheticOptions, TeacherInit};
pub use idx::{
    load_idx, load_idx_subset, read_idx_images, read_idx_labels, write_idx_images,
    write_idx_labels, IMAGES_MAGIC, LABELS_MAGIC,
};
pub use sweep::{
    batch_sweep, default_batch_grid, largest_batch_within, power_of_two_grid, threshold_batch,
    SweepResult, SweepRow, SweepSpec, DEFAULT_SLACK,
};
pub use train::{
    diversity_trace, initial_weights, train_to_target, tune_step_size, EpochsOutcome, Sampling,
    Target, TrainConfig, TrainOutcome, TuneResult, DEFAULT_EPOCH_CAP, DEFAULT_LR_GRID,
    DIVERSITY_EVERY, TUNING_EPOCHS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::network::ActivationKind;
use crate::numerics::SeedKey;

/// One CSV row of a sweep:
/// `dataset,L,K,params,activation,B,tuned_lr,epochs,converged,final_metric,avg_diversity,seed`.
/// `epochs` is empty unless the run converged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub dataset: String,
    #[serde(rename = "L")]
    pub hidden_layers: usize,
    #[serde(rename = "K")]
    pub width: usize,
    pub params: usize,
    pub activation: ActivationKind,
    #[serde(rename = "B")]
    pub batch: usize,
    pub tuned_lr: Option<f64>,
    pub epochs: Option<usize>,
    pub converged: bool,
    pub final_metric: Option<f64>,
    pub avg_diversity: Option<f64>,
    pub seed: u64,
}

pub const SWEEP_CSV_HEADER: [&str; 12] = [
    "dataset",
    "L",
    "K",
    "params",
    "activation",
    "B",
    "tuned_lr",
    "epochs",
    "converged",
    "final_metric",
    "avg_diversity",
    "seed",
];

impl SweepRecord {
    pub fn from_row(dataset: &str, activation: ActivationKind, seed: u64, row: &SweepRow) -> Self {
        let epochs = if row.error.is_none() {
            row.epochs.epochs()
        } else {
            None
        };
        Self {
            dataset: dataset.to_string(),
            hidden_layers: row.hidden_layers,
            width: row.width,
            params: row.params,
            activation,
            batch: row.batch,
            tuned_lr: row.tuned_lr,
            epochs,
            converged: epochs.is_some(),
            final_metric: row.final_metric,
            avg_diversity: row.avg_diversity,
            seed,
        }
    }
}

/// Run metadata written next to a sweep CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub dataset: String,
    pub examples: usize,
    pub budget: Option<ParamBudget>,
    pub depths: Vec<usize>,
    pub batches: Vec<usize>,
    pub target: Target,
    pub lr_grid: Vec<f64>,
    pub epoch_cap: usize,
    pub threshold_slack: f64,
    pub tuning_epochs: usize,
    pub tuning_epochs_counted: bool,
    pub sampling: Sampling,
    pub initialization: String,
    pub seed: u64,
    /// B* for each depth, in `depths` order.
    pub threshold_batches: Vec<Option<usize>>,
}

impl SweepMetadata {
    pub fn new(dataset: &str, examples: usize, spec: &SweepSpec, seed: u64) -> Self {
        Self {
            dataset: dataset.to_string(),
            examples,
            budget: None,
            depths: Vec::new(),
            batches: spec.batches.clone(),
            target: spec.target,
            lr_grid: spec.lr_grid.clone(),
            epoch_cap: spec.epoch_cap,
            threshold_slack: spec.slack,
            tuning_epochs: TUNING_EPOCHS,
            tuning_epochs_counted: false,
            sampling: spec.sampling,
            initialization: "gaussian, variance 1/fan_in".into(),
            seed,
            threshold_batches: Vec::new(),
        }
    }
}

/// Average diversity across a fixed-budget depth grid on one shared
/// synthetic regression dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityScanSpec {
    pub budget: ParamBudget,
    /// Hidden layer counts.
    pub depths: Vec<usize>,
    pub n: usize,
    pub batch: usize,
    pub target: Target,
    pub lr_grid: Vec<f64>,
    pub epoch_cap: usize,
    pub seed: SeedKey,
    #[serde(skip)]
    pub exec: Execution,
}

impl DiversityScanSpec {
    pub fn new(budget: ParamBudget, depths: Vec<usize>, n: usize, seed: SeedKey) -> Self {
        Self {
            budget,
            depths,
            n,
            batch: 32,
            target: Target::Loss(1e-12),
            lr_grid: DEFAULT_LR_GRID.to_vec(),
            epoch_cap: DEFAULT_EPOCH_CAP,
            seed,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityScanRow {
    #[serde(rename = "L")]
    pub hidden_layers: usize,
    #[serde(rename = "K")]
    pub width: usize,
    pub params: usize,
    #[serde(rename = "B")]
    pub batch: usize,
    pub tuned_lr: f64,
    pub epochs: Option<usize>,
    pub avg_diversity: Option<f64>,
    pub snapshots: usize,
}

/// Trains one linear network per depth on the same data (labels from a
/// linear teacher shaped like the deepest configuration) and records the
/// mean diversity of the run.
pub fn fixed_budget_diversity(spec: &DiversityScanSpec) -> Result<Vec<DiversityScanRow>> {
    let deepest = *spec
        .depths
        .iter()
        .max()
        .ok_or_else(|| Error::invalid("depth grid is empty"))?;
    let teacher = spec.budget.shape(deepest, ActivationKind::Linear)?;
    let (data, _) = make_synthetic(&teacher, spec.n, spec.seed.named("data"))?;
    let rows = map_indexed(spec.exec, spec.depths.len(), |i| -> Result<DiversityScanRow> {
        let hidden = spec.depths[i];
        let shape = spec.budget.shape(hidden, ActivationKind::Linear)?;
        let mut cfg = TrainConfig::new(spec.batch, spec.target, spec.seed.named(&format!("depth-{hidden}")));
        cfg.lr_grid = spec.lr_grid.clone();
        cfg.epoch_cap = spec.epoch_cap;
        cfg.exec = spec.exec;
        cfg.step_size = tune_step_size(&shape, &data, &cfg)?.step_size;
        let out = diversity_trace(&shape, &data, &cfg)?;
        Ok(DiversityScanRow {
            hidden_layers: hidden,
            width: shape.widths()[1],
            params: shape.param_count(),
            batch: spec.batch,
            tuned_lr: cfg.step_size,
            epochs: out.epochs.epochs(),
            avg_diversity: out.avg_diversity,
            snapshots: out.diversity_snapshots.len(),
        })
    });
    rows.into_iter().collect()
}
