//! Sampling estimates of the gradient expectations, for comparison with
//! [`crate::theory`].
//!
//! A trial draws a student `W`, a teacher `W*` of the same architecture and
//! inputs `x_1..x_n`, all entries i.i.d. N(0,1), labels `y_i = W*(x_i)`, and
//! computes the per-example square-loss gradients at `W`.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::network::{ActivationKind, Backprop, NetworkShape, WeightStack};
use crate::numerics::{
    dot, gaussian_matrix, mc_estimate_vec, neumaier_sum, squared_norm, MCEstimate, MCSummary,
    Matrix, SeedKey,
};
use crate::theory;

/// Which variables a trial draws afresh.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Student, teacher and data are all resampled every trial.
    #[default]
    Full,
    /// Layers `1..L-1` of student and teacher and the inputs are drawn once
    /// from `key.named("conditioning")`; only `W_L` and `W*_L` vary per trial.
    ConditionOnLowerLayers,
    /// Diagnostic: the teacher is the student, so every residual is zero.
    TeacherEqualsStudent,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MCConfig {
    /// `K_0..K_{L-1}`; the output width is 1.
    pub widths: Vec<usize>,
    pub n: usize,
    pub activation: ActivationKind,
    pub trials: u64,
    pub key: SeedKey,
    pub mode: SamplingMode,
    #[serde(skip)]
    pub exec: Execution,
}

impl MCConfig {
    pub fn new(widths: Vec<usize>, n: usize, trials: u64, key: SeedKey) -> Result<Self> {
        let cfg = Self {
            widths,
            n,
            activation: ActivationKind::Linear,
            trials,
            key,
            mode: SamplingMode::Full,
            exec: Execution::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_activation(mut self, activation: ActivationKind) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Number of weight matrices.
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn shape(&self) -> Result<NetworkShape> {
        NetworkShape::scalar_output(&self.widths, self.activation)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::invalid("need at least 2 trials for a standard error"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        self.shape()?.check_theory()
    }
}

/// Order-only trial-count guidance: 2·10⁵ up to widths 8 and `n ≤ 5`, then
/// scaled with `K⁴d³/n²` (the growth of the estimator variance), capped at
/// 2·10⁷. Constants are not derived.
pub fn suggested_trials(widths: &[usize], n: usize) -> u64 {
    const BASE: f64 = 200_000.0;
    let k = widths.iter().skip(1).copied().max().unwrap_or(1).max(1) as f64;
    let d = widths.first().copied().unwrap_or(1) as f64;
    let n = n.max(1) as f64;
    let reference = 8f64.powi(4) * 8f64.powi(3) / 25.0;
    let scale = (k.powi(4) * d.powi(3) / (n * n) / reference).max(1.0);
    (BASE * scale).min(2.0e7) as u64
}

/// Per-trial sampler. Holds the conditioned variables when the mode fixes them.
struct TrialSampler {
    shape: NetworkShape,
    n: usize,
    mode: SamplingMode,
    fixed: Option<(WeightStack, WeightStack, Matrix)>,
}

impl TrialSampler {
    fn new(cfg: &MCConfig) -> Result<Self> {
        cfg.validate()?;
        let shape = cfg.shape()?;
        let fixed = match cfg.mode {
            SamplingMode::ConditionOnLowerLayers => {
                let k = cfg.key.named("conditioning");
                Some(Self::draw(&shape, cfg.n, k)?)
            }
            _ => None,
        };
        Ok(Self {
            shape,
            n: cfg.n,
            mode: cfg.mode,
            fixed,
        })
    }

    fn draw(shape: &NetworkShape, n: usize, key: SeedKey) -> Result<(WeightStack, WeightStack, Matrix)> {
        let student = WeightStack::sample_gaussian(shape, key.child(1));
        let teacher = WeightStack::sample_gaussian(shape, key.child(2));
        let x = gaussian_matrix(n, shape.input_dim(), key.child(3))?;
        Ok((student, teacher, x))
    }

    fn sample(&self, key: SeedKey) -> Result<(WeightStack, WeightStack, Matrix)> {
        match (&self.fixed, self.mode) {
            (Some((s, t, x)), _) => {
                let l = self.shape.depth();
                let (mut s, mut t) = (s.clone(), t.clone());
                let (r, c) = self.shape.layer_dims(l);
                *s.layer_mut(l) = gaussian_matrix(r, c, key.child(1))?;
                *t.layer_mut(l) = gaussian_matrix(r, c, key.child(2))?;
                Ok((s, t, x.clone()))
            }
            (None, SamplingMode::TeacherEqualsStudent) => {
                let (s, _, x) = Self::draw(&self.shape, self.n, key)?;
                Ok((s.clone(), s, x))
            }
            (None, _) => Self::draw(&self.shape, self.n, key),
        }
    }

    /// Per-example gradients of one trial.
    fn gradients(&self, key: SeedKey) -> Result<TrialDraw> {
        let (student, teacher, x) = self.sample(key)?;
        let mut bp = Backprop::new(&self.shape);
        let mut grads = Vec::with_capacity(self.n);
        let mut residuals = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let y = bp.forward(&teacher, x.row(i))?[0];
            let mut g = vec![0.0; self.shape.param_count()];
            bp.gradient(&student, x.row(i), &[y], &mut g)?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure {
                    trial: key.stream_index,
                });
            }
            grads.push(g);
            residuals.push(bp.outputs()[0] - y);
        }
        Ok(TrialDraw {
            grads,
            residuals,
            student,
            x,
        })
    }
}

struct TrialDraw {
    grads: Vec<Vec<f64>>,
    /// `ŷ_i − y_i`
    residuals: Vec<f64>,
    student: WeightStack,
    x: Matrix,
}

/// One trial's totals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialStatistics {
    /// `n Σ‖∇f_i‖²`
    pub n_sum_sq: f64,
    /// `‖Σ∇f_i‖²`
    pub norm_of_sum_sq: f64,
    /// `Σ_{i≠j}⟨∇f_i,∇f_j⟩`
    pub cross: f64,
}

fn totals(grads: &[Vec<f64>]) -> TrialStatistics {
    let n = grads.len() as f64;
    let sum_sq = neumaier_sum(grads.iter().map(|g| squared_norm(g)));
    let mut pairs = Vec::with_capacity(grads.len() * grads.len() / 2);
    for (i, a) in grads.iter().enumerate() {
        for b in &grads[i + 1..] {
            pairs.push(2.0 * dot(a, b));
        }
    }
    let cross = neumaier_sum(pairs);
    TrialStatistics {
        n_sum_sq: n * sum_sq,
        norm_of_sum_sq: sum_sq + cross,
        cross,
    }
}

/// Draws one trial from `trial_key` and returns its totals.
pub fn trial_grad_statistics(cfg: &MCConfig, trial_key: SeedKey) -> Result<TrialStatistics> {
    let sampler = TrialSampler::new(cfg)?;
    Ok(totals(&sampler.gradients(trial_key)?.grads))
}

/// Which coordinates of a layer's gradient block feed a per-entry estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EntrySelector {
    /// `W_{a,p,q}` with 1-based `p`, `q`.
    Single { p: usize, q: usize },
    /// Average over every entry of the block. Entries are exchangeable, so the
    /// average has the same expectation as any single entry.
    Pooled,
}

/// Per-entry squared and cross statistics of one gradient block. The cross
/// value averages `g_i[e]·g_j[e]` over ordered pairs `i ≠ j`; it is 0 for
/// `n = 1`.
fn entry_stats(grads: &[Vec<f64>], entries: &[usize]) -> (f64, f64) {
    let n = grads.len() as f64;
    let mut sq = Vec::with_capacity(entries.len());
    let mut cross = Vec::with_capacity(entries.len());
    for &e in entries {
        let s = neumaier_sum(grads.iter().map(|g| g[e]));
        let q = neumaier_sum(grads.iter().map(|g| g[e] * g[e]));
        sq.push(q / n);
        if grads.len() > 1 {
            cross.push((s * s - q) / (n * (n - 1.0)));
        }
    }
    let m = entries.len() as f64;
    (neumaier_sum(sq) / m, neumaier_sum(cross) / m)
}

fn block_entries(shape: &NetworkShape, a: usize, sel: EntrySelector) -> Result<Vec<usize>> {
    if a == 0 || a > shape.depth() {
        return Err(Error::invalid(format!(
            "layer {a} outside 1..={}",
            shape.depth()
        )));
    }
    let (rows, cols) = shape.layer_dims(a);
    let off = shape.layer_offsets()[a - 1];
    match sel {
        EntrySelector::Pooled => Ok((off..off + rows * cols).collect()),
        EntrySelector::Single { p, q } => {
            if p == 0 || p > rows || q == 0 || q > cols {
                return Err(Error::invalid(format!(
                    "entry ({p},{q}) outside the {rows}x{cols} block of layer {a}"
                )));
            }
            Ok(vec![off + (p - 1) * cols + (q - 1)])
        }
    }
}

/// Estimates of the three totals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradExpectations {
    pub n_sum_sq: MCEstimate,
    pub norm_of_sum_sq: MCEstimate,
    pub cross: MCEstimate,
    /// Ratio of the first two means, delta-method stderr.
    pub rho: MCEstimate,
}

/// Per-entry estimates for one layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerEntryEstimate {
    pub layer: usize,
    pub sq: MCEstimate,
    /// `None` for `n = 1`.
    pub cross: Option<MCEstimate>,
}

/// Every statistic from a single run: totals and pooled per-layer entries.
#[derive(Clone, Debug)]
pub struct FullEstimate {
    summary: MCSummary,
    depth: usize,
    n: usize,
}

const TOTALS: usize = 3;

impl FullEstimate {
    pub fn totals(&self) -> GradExpectations {
        GradExpectations {
            n_sum_sq: self.summary.estimate(0),
            norm_of_sum_sq: self.summary.estimate(1),
            cross: self.summary.estimate(2),
            rho: self.summary.ratio(0, 1),
        }
    }

    /// Pooled per-entry estimates of layer `a` (1-based).
    pub fn layer(&self, a: usize) -> PerEntryEstimate {
        assert!(a >= 1 && a <= self.depth, "layer out of range");
        let base = TOTALS + 2 * (a - 1);
        PerEntryEstimate {
            layer: a,
            sq: self.summary.estimate(base),
            cross: (self.n > 1).then(|| self.summary.estimate(base + 1)),
        }
    }

    pub fn summary(&self) -> &MCSummary {
        &self.summary
    }
}

/// Runs `cfg.trials` trials, recording the totals and the pooled per-entry
/// statistics of every layer.
pub fn estimate_all(cfg: &MCConfig) -> Result<FullEstimate> {
    let sampler = TrialSampler::new(cfg)?;
    let depth = sampler.shape.depth();
    let blocks = (1..=depth)
        .map(|a| block_entries(&sampler.shape, a, EntrySelector::Pooled))
        .collect::<Result<Vec<_>>>()?;
    let summary = mc_estimate_vec(TOTALS + 2 * depth, cfg.trials, cfg.key, cfg.exec, |k, out| {
        let grads = sampler.gradients(k)?.grads;
        let t = totals(&grads);
        out[..TOTALS].copy_from_slice(&[t.n_sum_sq, t.norm_of_sum_sq, t.cross]);
        for (a, entries) in blocks.iter().enumerate() {
            let (sq, cross) = entry_stats(&grads, entries);
            out[TOTALS + 2 * a] = sq;
            out[TOTALS + 2 * a + 1] = cross;
        }
        Ok(())
    })?;
    Ok(FullEstimate {
        summary,
        depth,
        n: cfg.n,
    })
}

pub fn estimate_grad_expectations(cfg: &MCConfig) -> Result<GradExpectations> {
    let sampler = TrialSampler::new(cfg)?;
    let summary = mc_estimate_vec(TOTALS, cfg.trials, cfg.key, cfg.exec, |k, out| {
        let grads = sampler.gradients(k)?.grads;
        let t = totals(&grads);
        out.copy_from_slice(&[t.n_sum_sq, t.norm_of_sum_sq, t.cross]);
        Ok(())
    })?;
    Ok(GradExpectations {
        n_sum_sq: summary.estimate(0),
        norm_of_sum_sq: summary.estimate(1),
        cross: summary.estimate(2),
        rho: summary.ratio(0, 1),
    })
}

pub fn estimate_per_layer(cfg: &MCConfig, a: usize, entry: EntrySelector) -> Result<PerEntryEstimate> {
    let sampler = TrialSampler::new(cfg)?;
    let entries = block_entries(&sampler.shape, a, entry)?;
    let summary = mc_estimate_vec(2, cfg.trials, cfg.key, cfg.exec, |k, out| {
        let grads = sampler.gradients(k)?.grads;
        let (sq, cross) = entry_stats(&grads, &entries);
        out[0] = sq;
        out[1] = cross;
        Ok(())
    })?;
    Ok(PerEntryEstimate {
        layer: a,
        sq: summary.estimate(0),
        cross: (cfg.n > 1).then(|| summary.estimate(1)),
    })
}

/// The layer-wise split of the two totals for a two-layer network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonlinearTermEstimate {
    /// `n Σ_i (ŷ_i−y_i)² ‖∂ŷ_i/∂W_1‖²`
    pub a1: MCEstimate,
    /// `n Σ_i (ŷ_i−y_i)² ‖∂ŷ_i/∂W_2‖²`
    pub a2: MCEstimate,
    /// `‖Σ_i (ŷ_i−y_i) ∂ŷ_i/∂W_1‖²`
    pub b1: MCEstimate,
    /// `‖Σ_i (ŷ_i−y_i) ∂ŷ_i/∂W_2‖²`
    pub b2: MCEstimate,
    /// `E[A_1+A_2] / E[B_1+B_2]`
    pub ratio: MCEstimate,
    /// Largest per-trial relative mismatch of `A_1+A_2` and `B_1+B_2` against
    /// the backprop totals.
    pub max_identity_error: f64,
}

/// Per-trial `[A_1, A_2, B_1, B_2]` and the worse of the two relative
/// identity mismatches against the backprop totals.
///
/// The terms use the explicit two-layer derivatives
/// `∂ŷ/∂W_{1,p,q} = W_{2,p} σ'(W_{1,p}·x) x_q` and `∂ŷ/∂W_{2,1,q} = σ(W_{1,q}·x)`,
/// independently of backprop.
fn nonlinear_trial(
    sampler: &TrialSampler,
    key: SeedKey,
    act: ActivationKind,
) -> Result<([f64; 4], f64)> {
    let TrialDraw {
        grads,
        residuals,
        student: w,
        x,
    } = sampler.gradients(key)?;
    let n = grads.len() as f64;
    let (w1, w2) = (w.layer(1), w.layer(2));
    let (k, d) = (w1.rows(), w1.cols());
    let mut a1 = Vec::with_capacity(grads.len());
    let mut a2 = Vec::with_capacity(grads.len());
    let mut sum1 = vec![0.0; k * d];
    let mut sum2 = vec![0.0; k];
    let mut hidden = vec![0.0; k];
    for (i, &r) in residuals.iter().enumerate() {
        let xi = x.row(i);
        w1.matvec_into(xi, &mut hidden);
        let mut norm1 = 0.0;
        let mut norm2 = 0.0;
        for (p, &h) in hidden.iter().enumerate() {
            let (s, ds) = act.eval(h);
            let scale = w2.get(0, p) * ds;
            for (q, &xq) in xi.iter().enumerate() {
                let dy = scale * xq;
                norm1 += dy * dy;
                sum1[p * d + q] += r * dy;
            }
            norm2 += s * s;
            sum2[p] += r * s;
        }
        a1.push(n * r * r * norm1);
        a2.push(n * r * r * norm2);
    }
    let (a1, a2) = (neumaier_sum(a1), neumaier_sum(a2));
    let (b1, b2) = (squared_norm(&sum1), squared_norm(&sum2));
    let t = totals(&grads);
    let rel = |x: f64, y: f64| if y == 0.0 { x.abs() } else { ((x - y) / y).abs() };
    let mismatch = rel(a1 + a2, t.n_sum_sq).max(rel(b1 + b2, t.norm_of_sum_sq));
    Ok(([a1, a2, b1, b2], mismatch))
}

/// Estimates `A_1, A_2, B_1, B_2` for a two-layer network with a bounded odd
/// activation and reports the worst per-trial identity mismatch.
pub fn estimate_nonlinear_terms(cfg: &MCConfig) -> Result<NonlinearTermEstimate> {
    if !cfg.activation.satisfies_nonlinear_hypotheses() {
        return Err(Error::UnsupportedActivation(format!(
            "{} is not a bounded odd activation",
            cfg.activation
        )));
    }
    if cfg.depth() != 2 {
        return Err(Error::invalid(format!(
            "the layer split needs a two-layer network, got {} layers",
            cfg.depth()
        )));
    }
    let sampler = TrialSampler::new(cfg)?;
    let act = cfg.activation;
    // nonnegative f64 bit patterns order like the values, so fetch_max is exact
    let worst = AtomicU64::new(0);
    let summary = mc_estimate_vec(4, cfg.trials, cfg.key, cfg.exec, |k, out| {
        let (terms, mismatch) = nonlinear_trial(&sampler, k, act)?;
        out.copy_from_slice(&terms);
        worst.fetch_max(mismatch.to_bits(), Ordering::Relaxed);
        Ok(())
    })?;
    Ok(NonlinearTermEstimate {
        a1: summary.estimate(0),
        a2: summary.estimate(1),
        b1: summary.estimate(2),
        b2: summary.estimate(3),
        ratio: ratio_of_sums(&summary),
        max_identity_error: f64::from_bits(worst.into_inner()),
    })
}

/// `(m_0+m_1)/(m_2+m_3)` with a delta-method stderr.
fn ratio_of_sums(s: &MCSummary) -> MCEstimate {
    let a = s.linear(&[(0, 1.0), (1, 1.0)]).mean;
    let b = s.linear(&[(2, 1.0), (3, 1.0)]).mean;
    let r = a / b;
    let cov = |i: &[usize], j: &[usize]| -> Option<f64> {
        let mut acc = 0.0;
        for &p in i {
            for &q in j {
                acc += s.covariance(p, q)?;
            }
        }
        Some(acc)
    };
    let var = (|| {
        let (vaa, vbb, vab) = (cov(&[0, 1], &[0, 1])?, cov(&[2, 3], &[2, 3])?, cov(&[0, 1], &[2, 3])?);
        Some((vaa - 2.0 * r * vab + r * r * vbb) / (b * b * s.trials() as f64))
    })();
    MCEstimate {
        mean: r,
        stderr: var.map(|v| v.max(0.0).sqrt()),
        trials: s.trials(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonStatus {
    Pass,
    Fail,
    Skipped,
}

/// One closed-form quantity against its Monte Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub quantity: String,
    pub layer: Option<usize>,
    pub empirical: MCEstimate,
    pub closed_form: Option<f64>,
    pub z_score: Option<f64>,
    pub rel_error: Option<f64>,
    pub status: ComparisonStatus,
    pub note: Option<String>,
}

impl ComparisonReport {
    /// Passes iff `|z| ≤ z_tol` and `|mean − cf|/|cf| ≤ rel_tol`.
    pub fn gate(
        quantity: impl Into<String>,
        layer: Option<usize>,
        empirical: MCEstimate,
        closed_form: f64,
        z_tol: f64,
        rel_tol: f64,
    ) -> Self {
        let z_score = empirical.z_score(closed_form);
        let rel_error = if closed_form != 0.0 {
            ((empirical.mean - closed_form) / closed_form).abs()
        } else {
            empirical.mean.abs()
        };
        let ok = z_score.is_some_and(|z| z.abs() <= z_tol) && rel_error <= rel_tol;
        Self {
            quantity: quantity.into(),
            layer,
            empirical,
            closed_form: Some(closed_form),
            z_score,
            rel_error: Some(rel_error),
            status: if ok {
                ComparisonStatus::Pass
            } else {
                ComparisonStatus::Fail
            },
            note: None,
        }
    }

    pub fn skipped(
        quantity: impl Into<String>,
        layer: Option<usize>,
        empirical: MCEstimate,
        note: impl Into<String>,
    ) -> Self {
        Self {
            quantity: quantity.into(),
            layer,
            empirical,
            closed_form: None,
            z_score: None,
            rel_error: None,
            status: ComparisonStatus::Skipped,
            note: Some(note.into()),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == ComparisonStatus::Pass
    }
}

const WIDTH_NOTE: &str = "precondition K_l >= 2 unmet";

/// Compares every closed form (three totals, then per-entry squared and cross
/// values for each layer) against one Monte Carlo run. Per-entry estimates are
/// pooled over the layer's block. Cross quantities are skipped when a width
/// is 1, and per-entry cross values when `n = 1`.
pub fn compare(cfg: &MCConfig, z_tol: f64, rel_tol: f64) -> Result<Vec<ComparisonReport>> {
    if cfg.activation != ActivationKind::Linear {
        return Err(Error::UnsupportedActivation(format!(
            "closed forms exist for linear networks only, got {}",
            cfg.activation
        )));
    }
    if cfg.mode != SamplingMode::Full {
        return Err(Error::invalid("closed forms average over every variable; use full sampling"));
    }
    let est = estimate_all(cfg)?;
    let t = est.totals();
    let w = &cfg.widths;
    let gate = |q: &str, l, e, cf| ComparisonReport::gate(q, l, e, cf, z_tol, rel_tol);
    let mut out = vec![gate(
        "e_n_sum_sq",
        None,
        t.n_sum_sq,
        theory::expected_n_sum_sq(w, cfg.n)?,
    )];
    match theory::expected_cross(w, cfg.n) {
        Ok(cross) => {
            let n = cfg.n as f64;
            let sum_sq = theory::expected_n_sum_sq(w, cfg.n)?;
            out.push(gate("e_norm_of_sum", None, t.norm_of_sum_sq, sum_sq / n + cross));
            out.push(gate("e_cross", None, t.cross, cross));
        }
        Err(Error::DivisionByZeroGuard { .. }) => {
            out.push(ComparisonReport::skipped("e_norm_of_sum", None, t.norm_of_sum_sq, WIDTH_NOTE));
            out.push(ComparisonReport::skipped("e_cross", None, t.cross, WIDTH_NOTE));
        }
        Err(e) => return Err(e),
    }
    for a in 1..=cfg.depth() {
        let layer = est.layer(a);
        out.push(gate(
            "per_entry_sq",
            Some(a),
            layer.sq,
            theory::per_layer_sq_entry(w, a)?,
        ));
        let Some(cross_est) = layer.cross else {
            out.push(ComparisonReport::skipped(
                "per_entry_cross",
                Some(a),
                est.summary().estimate(TOTALS + 2 * (a - 1) + 1),
                "needs n >= 2",
            ));
            continue;
        };
        match theory::per_layer_cross_entry(w, a) {
            Ok(cf) => out.push(gate("per_entry_cross", Some(a), cross_est, cf)),
            Err(Error::DivisionByZeroGuard { .. }) => out.push(ComparisonReport::skipped(
                "per_entry_cross",
                Some(a),
                cross_est,
                WIDTH_NOTE,
            )),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
