use rand::Rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::diversity::dataset_diversity_with;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::network::{evaluate_with, gradient_sum_with, Dataset, Metrics, NetworkShape, WeightStack};
use crate::numerics::{SeedKey, TrialRng};

/// Convergence criterion, evaluated on the training set after every epoch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Mean loss `≤ τ`.
    Loss(f64),
    /// Argmax accuracy `≥ α`.
    Accuracy(f64),
}

impl Target {
    pub fn is_met(&self, m: &Metrics) -> bool {
        match *self {
            Target::Loss(tau) => m.loss <= tau,
            Target::Accuracy(alpha) => m.accuracy.is_some_and(|a| a >= alpha),
        }
    }

    /// The metric the target is stated in.
    pub fn metric(&self, m: &Metrics) -> f64 {
        match self {
            Target::Loss(_) => m.loss,
            Target::Accuracy(_) => m.accuracy.unwrap_or(f64::NAN),
        }
    }
}

/// How mini-batch indices are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// i.i.d. uniform over `[n]` with replacement.
    #[default]
    WithReplacement,
    /// Consecutive slices of a fresh permutation each epoch.
    Shuffled,
}

pub const DEFAULT_LR_GRID: [f64; 7] = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
pub const DEFAULT_EPOCH_CAP: usize = 250;
pub const TUNING_EPOCHS: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub step_size: f64,
    pub lr_grid: Vec<f64>,
    pub epoch_cap: usize,
    pub target: Target,
    pub seed: SeedKey,
    pub sampling: Sampling,
    /// Permit `B > n`.
    pub allow_oversized_batch: bool,
    #[serde(skip)]
    pub exec: Execution,
}

impl TrainConfig {
    pub fn new(batch_size: usize, target: Target, seed: SeedKey) -> Self {
        Self {
            batch_size,
            step_size: DEFAULT_LR_GRID[0],
            lr_grid: DEFAULT_LR_GRID.to_vec(),
            epoch_cap: DEFAULT_EPOCH_CAP,
            target,
            seed,
            sampling: Sampling::default(),
            allow_oversized_batch: false,
            exec: Execution::default(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if self.batch_size > n && !self.allow_oversized_batch {
            return Err(Error::invalid(format!(
                "batch size {} exceeds n = {n}",
                self.batch_size
            )));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step size must be finite and nonnegative"));
        }
        if self.lr_grid.is_empty() {
            return Err(Error::invalid("step-size grid is empty"));
        }
        if self.lr_grid.iter().any(|&g| !(g > 0.0 && g.is_finite()))
            || self.lr_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid(
                "step-size grid must be positive and strictly ascending",
            ));
        }
        Ok(())
    }

    /// Iterations per epoch, `⌈n/B⌉`.
    pub fn iterations_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size)
    }
}

/// Epochs to reach the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpochsOutcome {
    Converged(usize),
    DidNotConverge,
    /// The loss became non-finite during this epoch.
    Diverged(usize),
}

impl EpochsOutcome {
    pub fn epochs(&self) -> Option<usize> {
        match self {
            EpochsOutcome::Converged(e) => Some(*e),
            _ => None,
        }
    }

    /// Order key where non-convergence ranks after every converged count.
    pub fn rank(&self) -> usize {
        self.epochs().unwrap_or(usize::MAX)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub epochs: EpochsOutcome,
    /// Target metric after the last completed epoch.
    pub final_metric: f64,
    pub final_loss: f64,
    pub epochs_run: usize,
    pub gradient_evaluations: u64,
    /// Mean of the diversity snapshots, when traced.
    pub avg_diversity: Option<f64>,
    pub diversity_snapshots: Vec<f64>,
    #[serde(skip)]
    pub weights: WeightStack,
}

/// Draws mini-batch indices for one run.
struct BatchSource {
    rng: TrialRng,
    sampling: Sampling,
    n: usize,
    perm: Vec<usize>,
    pos: usize,
}

impl BatchSource {
    fn new(n: usize, sampling: Sampling, key: SeedKey) -> Self {
        Self {
            rng: key.rng(),
            sampling,
            n,
            perm: (0..n).collect(),
            pos: n,
        }
    }

    fn start_epoch(&mut self) {
        if self.sampling == Sampling::Shuffled {
            self.perm.shuffle(&mut self.rng);
            self.pos = 0;
        }
    }

    fn fill(&mut self, out: &mut Vec<usize>, b: usize) {
        out.clear();
        match self.sampling {
            Sampling::WithReplacement => {
                out.extend((0..b).map(|_| self.rng.random_range(0..self.n)));
            }
            Sampling::Shuffled => {
                while out.len() < b {
                    if self.pos == self.n {
                        self.perm.shuffle(&mut self.rng);
                        self.pos = 0;
                    }
                    let take = (b - out.len()).min(self.n - self.pos);
                    out.extend_from_slice(&self.perm[self.pos..self.pos + take]);
                    self.pos += take;
                }
            }
        }
    }
}

/// Initial weights of every run: N(0, 1/K_{ℓ-1}) from `seed.named("init")`.
pub fn initial_weights(shape: &NetworkShape, seed: SeedKey) -> WeightStack {
    WeightStack::init_scaled(shape, seed.named("init"))
}

/// Mini-batch SGD `w ← w − γ Σ_{s∈batch} ∇f_s(w)`.
///
/// `trace_every` takes diversity snapshots over all `n` gradients at epoch 0
/// and every `trace_every` epochs after it. `stop_at_target = false` runs
/// exactly `epoch_cap` epochs.
fn run_sgd(
    shape: &NetworkShape,
    data: &Dataset,
    cfg: &TrainConfig,
    trace_every: Option<usize>,
    stop_at_target: bool,
) -> Result<TrainOutcome> {
    cfg.validate(data.len())?;
    let exec = cfg.exec;
    let n = data.len();
    let mut w = initial_weights(shape, cfg.seed);
    let mut batches = BatchSource::new(n, cfg.sampling, cfg.seed.named("batches"));
    let mut indices = Vec::with_capacity(cfg.batch_size);
    let mut grad = vec![0.0; w.param_count()];
    let mut snapshots = Vec::new();
    let mut evaluations = 0u64;

    let snapshot = |w: &WeightStack, snapshots: &mut Vec<f64>, epoch: usize| -> Result<()> {
        if trace_every.is_some_and(|k| epoch % k == 0) {
            let r = dataset_diversity_with(exec, w, data)?;
            // all-zero gradients (exact fit) carry no diversity information
            if let Some(d) = r.delta {
                snapshots.push(d);
            }
        }
        Ok(())
    };
    let finish = |w: WeightStack,
                  epochs: EpochsOutcome,
                  m: Metrics,
                  run: usize,
                  evals: u64,
                  snaps: Vec<f64>| {
        TrainOutcome {
            epochs,
            final_metric: cfg.target.metric(&m),
            final_loss: m.loss,
            epochs_run: run,
            gradient_evaluations: evals,
            avg_diversity: (!snaps.is_empty()).then(|| snaps.iter().sum::<f64>() / snaps.len() as f64),
            diversity_snapshots: snaps,
            weights: w,
        }
    };

    let mut metrics = evaluate_with(exec, &w, data)?;
    snapshot(&w, &mut snapshots, 0)?;
    if stop_at_target && cfg.target.is_met(&metrics) {
        return Ok(finish(w, EpochsOutcome::Converged(0), metrics, 0, 0, snapshots));
    }
    for epoch in 1..=cfg.epoch_cap {
        batches.start_epoch();
        for _ in 0..cfg.iterations_per_epoch(n) {
            batches.fill(&mut indices, cfg.batch_size);
            gradient_sum_with(exec, &w, data, &indices, &mut grad)?;
            evaluations += indices.len() as u64;
            w.axpy(-cfg.step_size, &grad);
            if !w.is_finite() {
                break;
            }
        }
        metrics = if w.is_finite() {
            evaluate_with(exec, &w, data)?
        } else {
            Metrics {
                loss: f64::NAN,
                accuracy: None,
            }
        };
        if !metrics.loss.is_finite() {
            let m = Metrics {
                loss: f64::INFINITY,
                ..metrics
            };
            return Ok(finish(w, EpochsOutcome::Diverged(epoch), m, epoch, evaluations, snapshots));
        }
        snapshot(&w, &mut snapshots, epoch)?;
        if stop_at_target && cfg.target.is_met(&metrics) {
            return Ok(finish(w, EpochsOutcome::Converged(epoch), metrics, epoch, evaluations, snapshots));
        }
    }
    let outcome = if !stop_at_target && cfg.target.is_met(&metrics) {
        EpochsOutcome::Converged(cfg.epoch_cap)
    } else {
        EpochsOutcome::DidNotConverge
    };
    Ok(finish(w, outcome, metrics, cfg.epoch_cap, evaluations, snapshots))
}

/// Trains with `cfg.step_size` until the target is met or `epoch_cap` epochs
/// have run.
pub fn train_to_target(shape: &NetworkShape, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    run_sgd(shape, data, cfg, None, true)
}

pub const DIVERSITY_EVERY: usize = 10;

/// [`train_to_target`] with diversity snapshots at epoch 0 and every 10
/// epochs; the outcome's `avg_diversity` is their mean.
pub fn diversity_trace(shape: &NetworkShape, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    run_sgd(shape, data, cfg, Some(DIVERSITY_EVERY), true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneResult {
    pub step_size: f64,
    /// `(γ, training loss after two epochs)`; diverged runs report `+∞`.
    pub losses: Vec<(f64, f64)>,
}

/// Trains a fresh, identically initialized model for two epochs per grid
/// value and returns the one with the lowest final training loss. Ties go to
/// the smaller step size.
pub fn tune_step_size(shape: &NetworkShape, data: &Dataset, cfg: &TrainConfig) -> Result<TuneResult> {
    cfg.validate(data.len())?;
    let runs = map_indexed(cfg.exec, cfg.lr_grid.len(), |i| {
        let c = TrainConfig {
            step_size: cfg.lr_grid[i],
            epoch_cap: TUNING_EPOCHS,
            ..cfg.clone()
        };
        run_sgd(shape, data, &c, None, false).map(|o| o.final_loss)
    });
    let mut losses = Vec::with_capacity(runs.len());
    for (&lr, r) in cfg.lr_grid.iter().zip(runs) {
        let loss = r?;
        losses.push((lr, if loss.is_finite() { loss } else { f64::INFINITY }));
    }
    let best = losses
        .iter()
        .filter(|(_, l)| l.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::NoViableStepSize)?;
    Ok(TuneResult {
        step_size: best.0,
        losses,
    })
}
