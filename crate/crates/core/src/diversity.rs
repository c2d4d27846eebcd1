//! Gradient diversity
//!
//! ```text
//! Δ_S(w) = Σ‖∇f_i‖² / ‖Σ∇f_i‖²,      B_S(w) = n·Δ_S(w)
//! ```
//!
//! and the batch size `⌊δ·n·Δ + 1⌋` under which mini-batch SGD keeps the
//! per-gradient progress of serial SGD.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, tree_reduce, Execution};
use crate::network::{fold_gradients, Dataset, WeightStack};
use crate::numerics::{dot, neumaier_sum, squared_norm, CompensatedVec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiversityReport {
    pub n: usize,
    /// `Σ‖∇f_i‖²`
    pub sum_sq_norms: f64,
    /// `Σ_{i≠j} ⟨∇f_i, ∇f_j⟩`
    pub cross_term: f64,
    /// `‖Σ∇f_i‖²`
    pub norm_of_sum_sq: f64,
    /// `None` when every gradient is zero (the ratio is 0/0). Exact
    /// cancellation of nonzero gradients gives `+∞`.
    pub delta: Option<f64>,
    pub batch_bound: Option<f64>,
}

impl DiversityReport {
    pub fn is_degenerate(&self) -> bool {
        self.delta.is_none()
    }

    /// Builds the report from the two sums. `cross = ‖Σg‖² − Σ‖g‖²`.
    pub fn from_sums(n: usize, sum_sq_norms: f64, norm_of_sum_sq: f64) -> Self {
        let delta = if norm_of_sum_sq > 0.0 {
            Some(sum_sq_norms / norm_of_sum_sq)
        } else if sum_sq_norms > 0.0 {
            Some(f64::INFINITY)
        } else {
            None
        };
        Self {
            n,
            sum_sq_norms,
            cross_term: norm_of_sum_sq - sum_sq_norms,
            norm_of_sum_sq,
            delta,
            batch_bound: delta.map(|d| n as f64 * d),
        }
    }
}

fn check_gradients<G: AsRef<[f64]>>(gradients: &[G]) -> Result<usize> {
    let first = gradients
        .first()
        .ok_or_else(|| Error::invalid("need at least one gradient"))?;
    let len = first.as_ref().len();
    if gradients.iter().any(|g| g.as_ref().len() != len) {
        return Err(Error::invalid("gradients have different lengths"));
    }
    Ok(len)
}

/// Diversity report in one pass over the gradient sum (O(n·dim)).
///
/// Returns [`Error::Degenerate`] when all gradients are zero; use
/// [`diversity_report_allow_degenerate`] to get the report with `delta = None`.
pub fn diversity_report<G: AsRef<[f64]> + Sync>(gradients: &[G]) -> Result<DiversityReport> {
    let report = diversity_report_allow_degenerate(gradients)?;
    if report.is_degenerate() {
        return Err(Error::Degenerate(
            "all gradients are zero; diversity is 0/0".into(),
        ));
    }
    Ok(report)
}

pub fn diversity_report_allow_degenerate<G: AsRef<[f64]> + Sync>(
    gradients: &[G],
) -> Result<DiversityReport> {
    diversity_report_with(Execution::Parallel, gradients)
}

const GRAD_CHUNK: usize = 128;

pub fn diversity_report_with<G: AsRef<[f64]> + Sync>(
    exec: Execution,
    gradients: &[G],
) -> Result<DiversityReport> {
    let len = check_gradients(gradients)?;
    let n = gradients.len();
    let parts = map_indexed(exec, n.div_ceil(GRAD_CHUNK), |c| {
        let mut sum = CompensatedVec::zeros(len);
        let mut sq = Vec::with_capacity(GRAD_CHUNK);
        for g in &gradients[c * GRAD_CHUNK..((c + 1) * GRAD_CHUNK).min(n)] {
            let g = g.as_ref();
            sum.add(g);
            sq.push(squared_norm(g));
        }
        (sum, neumaier_sum(sq))
    });
    let sum_sq_norms = neumaier_sum(parts.iter().map(|p| p.1));
    let total = tree_reduce(
        parts.into_iter().map(|p| p.0).collect(),
        |mut a, b| {
            a.merge(&b);
            a
        },
    )
    .expect("non-empty")
    .finish();
    Ok(DiversityReport::from_sums(n, sum_sq_norms, squared_norm(&total)))
}

/// Diversity of all per-example gradients of `data` at `weights`, streamed
/// so the gradients are never stored together.
pub fn dataset_diversity_with(
    exec: Execution,
    weights: &WeightStack,
    data: &Dataset,
) -> Result<DiversityReport> {
    let p = weights.param_count();
    let indices: Vec<usize> = (0..data.len()).collect();
    let parts = fold_gradients(
        exec,
        weights,
        data,
        &indices,
        || (CompensatedVec::zeros(p), Vec::new()),
        |(sum, sq), _, g| {
            sum.add(g);
            sq.push(squared_norm(g));
        },
    )?;
    let sum_sq_norms = neumaier_sum(parts.iter().flat_map(|p| p.1.iter().copied()));
    let total = tree_reduce(
        parts.into_iter().map(|p| p.0).collect(),
        |mut a, b| {
            a.merge(&b);
            a
        },
    )
    .ok_or_else(|| Error::invalid("empty dataset"))?
    .finish();
    Ok(DiversityReport::from_sums(
        data.len(),
        sum_sq_norms,
        squared_norm(&total),
    ))
}

/// Exact `Σ_{i≠j} ⟨g_i, g_j⟩` over ordered pairs, O(n²·dim).
pub fn pairwise_cross_sum<G: AsRef<[f64]>>(gradients: &[G]) -> Result<f64> {
    check_gradients(gradients)?;
    let mut terms = Vec::new();
    for (i, a) in gradients.iter().enumerate() {
        for b in &gradients[i + 1..] {
            terms.push(2.0 * dot(a.as_ref(), b.as_ref()));
        }
    }
    Ok(neumaier_sum(terms))
}

/// Inputs of the safe-batch rule `B ≤ δ·n·Δ + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpliedBatchQuery {
    pub delta_slack: f64,
    pub n: usize,
    pub diversity: f64,
}

impl ImpliedBatchQuery {
    pub fn new(delta_slack: f64, n: usize, diversity: f64) -> Result<Self> {
        if !(delta_slack > 0.0) || !delta_slack.is_finite() {
            return Err(Error::invalid("slack δ must be positive and finite"));
        }
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !(diversity >= 0.0) {
            return Err(Error::invalid("diversity must be nonnegative"));
        }
        Ok(Self {
            delta_slack,
            n,
            diversity,
        })
    }
}

/// `⌊δ·n·Δ + 1⌋`, at least 1. Saturates at `u64::MAX` for unbounded Δ.
pub fn implied_safe_batch(q: ImpliedBatchQuery) -> u64 {
    let b = (q.delta_slack * q.n as f64 * q.diversity + 1.0).floor();
    if b >= u64::MAX as f64 {
        u64::MAX
    } else {
        (b as u64).max(1)
    }
}
