use serde::{Deserialize, Serialize};

use super::train::{
    diversity_trace, train_to_target, tune_step_size, EpochsOutcome, Sampling, Target, TrainConfig,
    DEFAULT_EPOCH_CAP, DEFAULT_LR_GRID,
};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::network::{Dataset, NetworkShape};
use crate::numerics::SeedKey;

pub const DEFAULT_SLACK: f64 = 1.5;

/// `2^lo, 2^(lo+1), …, 2^hi`.
pub fn power_of_two_grid(lo: u32, hi: u32) -> Result<Vec<usize>> {
    if lo > hi || hi >= usize::BITS {
        return Err(Error::invalid(format!("bad exponent range {lo}..{hi}")));
    }
    Ok((lo..=hi).map(|i| 1usize << i).collect())
}

/// Batch grid `2^5..2^12`.
pub fn default_batch_grid() -> Vec<usize> {
    power_of_two_grid(5, 12).expect("static range")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub batches: Vec<usize>,
    pub target: Target,
    pub lr_grid: Vec<f64>,
    pub epoch_cap: usize,
    /// B* keeps batches within `slack ×` the fewest epochs.
    pub slack: f64,
    pub seed: SeedKey,
    pub sampling: Sampling,
    pub trace_diversity: bool,
    pub allow_oversized_batch: bool,
    #[serde(skip)]
    pub exec: Execution,
}

impl SweepSpec {
    pub fn new(target: Target, seed: SeedKey) -> Self {
        Self {
            batches: default_batch_grid(),
            target,
            lr_grid: DEFAULT_LR_GRID.to_vec(),
            epoch_cap: DEFAULT_EPOCH_CAP,
            slack: DEFAULT_SLACK,
            seed,
            sampling: Sampling::default(),
            trace_diversity: false,
            allow_oversized_batch: false,
            exec: Execution::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batches.is_empty() || self.batches.contains(&0) {
            return Err(Error::invalid("batch grid must be nonempty and positive"));
        }
        if !(self.slack >= 1.0) {
            return Err(Error::invalid("B* slack must be at least 1"));
        }
        Ok(())
    }

    /// Per-batch training config. Every batch size gets its own stream.
    pub fn train_config(&self, batch: usize) -> TrainConfig {
        let mut c = TrainConfig::new(batch, self.target, self.seed.named(&format!("batch-{batch}")));
        c.lr_grid = self.lr_grid.clone();
        c.epoch_cap = self.epoch_cap;
        c.sampling = self.sampling;
        c.allow_oversized_batch = self.allow_oversized_batch;
        c.exec = self.exec;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// Hidden layer count.
    pub hidden_layers: usize,
    /// Width of the first hidden layer.
    pub width: usize,
    pub params: usize,
    pub batch: usize,
    pub tuned_lr: Option<f64>,
    pub epochs: EpochsOutcome,
    pub final_metric: Option<f64>,
    pub avg_diversity: Option<f64>,
    /// Set when the row could not be trained (e.g. no viable step size).
    pub error: Option<String>,
}

impl SweepRow {
    /// Ordering key: epochs when converged, `usize::MAX` otherwise.
    pub fn epochs_rank(&self) -> usize {
        if self.error.is_some() {
            usize::MAX
        } else {
            self.epochs.rank()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub threshold_batch: Option<usize>,
    pub slack: f64,
}

impl SweepResult {
    pub fn row(&self, batch: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.batch == batch)
    }

    /// Largest batch whose epochs-to-target is at most `budget_epochs`.
    pub fn largest_batch_within(&self, budget_epochs: usize) -> Option<usize> {
        self.rows
            .iter()
            .filter(|r| r.error.is_none() && r.epochs.epochs().is_some_and(|e| e <= budget_epochs))
            .map(|r| r.batch)
            .max()
    }
}

/// Largest batch `B` with `epochs(B) ≤ slack · min_B epochs(B)` over the
/// converged rows.
pub fn threshold_batch(rows: &[SweepRow], slack: f64) -> Option<usize> {
    let converged = || rows.iter().filter(|r| r.error.is_none()).filter_map(|r| Some((r.batch, r.epochs.epochs()?)));
    let best = converged().map(|(_, e)| e).min()?;
    converged()
        .filter(|&(_, e)| e as f64 <= slack * best as f64)
        .map(|(b, _)| b)
        .max()
}

fn shape_summary(shape: &NetworkShape) -> (usize, usize) {
    let hidden = shape.depth() - 1;
    let width = if hidden == 0 { 0 } else { shape.widths()[1] };
    (hidden, width)
}

/// For each batch size: tunes γ over the grid, trains to the target and
/// records epochs. Rows run concurrently; a failed row is recorded, not fatal.
pub fn batch_sweep(shape: &NetworkShape, data: &Dataset, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let (hidden_layers, width) = shape_summary(shape);
    let rows = map_indexed(spec.exec, spec.batches.len(), |i| {
        let batch = spec.batches[i];
        let mut row = SweepRow {
            hidden_layers,
            width,
            params: shape.param_count(),
            batch,
            tuned_lr: None,
            epochs: EpochsOutcome::DidNotConverge,
            final_metric: None,
            avg_diversity: None,
            error: None,
        };
        let mut run = || -> Result<()> {
            let mut cfg = spec.train_config(batch);
            let tuned = tune_step_size(shape, data, &cfg)?;
            cfg.step_size = tuned.step_size;
            row.tuned_lr = Some(tuned.step_size);
            let out = if spec.trace_diversity {
                diversity_trace(shape, data, &cfg)?
            } else {
                train_to_target(shape, data, &cfg)?
            };
            row.epochs = out.epochs;
            row.final_metric = Some(out.final_metric);
            row.avg_diversity = out.avg_diversity;
            Ok(())
        };
        if let Err(e) = run() {
            row.error = Some(e.to_string());
        }
        row
    });
    Ok(SweepResult {
        threshold_batch: threshold_batch(&rows, spec.slack),
        rows,
        slack: spec.slack,
    })
}

/// Runs [`batch_sweep`] and returns the largest batch that reaches the target
/// within `budget_epochs`.
pub fn largest_batch_within(
    budget_epochs: usize,
    shape: &NetworkShape,
    data: &Dataset,
    spec: &SweepSpec,
) -> Result<Option<usize>> {
    Ok(batch_sweep(shape, data, spec)?.largest_batch_within(budget_epochs))
}
