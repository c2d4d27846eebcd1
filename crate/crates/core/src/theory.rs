//! Closed-form gradient expectations for Gaussian networks.
//!
//! Widths are passed as `K_0..K_{L-1}` (`K_0 = d`); the output width `K_L` is
//! always 1. Weights, teacher weights and inputs are i.i.d. N(0,1) unless a
//! [`MomentProfile`] says otherwise. Empty products are 1.
//!
//! The Θ/Ω results are exposed with every hidden constant set to 1. They are
//! shapes for trend comparisons, not numeric bounds.

use serde::Serialize;

use crate::error::{Error, Result};

fn check_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 {
        return Err(Error::invalid(format!(
            "need L >= 2 layers (widths K_0..K_(L-1)), got {widths:?}"
        )));
    }
    if widths.iter().any(|&k| k == 0) {
        return Err(Error::invalid(format!("widths must be positive, got {widths:?}")));
    }
    Ok(())
}

fn check_cross_widths(widths: &[usize]) -> Result<()> {
    if let Some((layer, &width)) = widths.iter().enumerate().find(|(_, &k)| k < 2) {
        return Err(Error::DivisionByZeroGuard { layer, width });
    }
    Ok(())
}

fn prod<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().product()
}

/// `Σ_{φ=0}^{last} w(φ)/(K_φ−1) · ∏_{ℓ=0}^{φ} (K_ℓ−1)/(K_ℓ+2)`
fn cross_series(widths: &[usize], last: usize, weight: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut running = 1.0;
    for (phi, &k) in widths.iter().enumerate().take(last + 1) {
        let k = k as f64;
        running *= (k - 1.0) / (k + 2.0);
        acc += weight(phi) / (k - 1.0) * running;
    }
    acc
}

/// `∏_{ℓ=0}^{L-1} K_ℓ/(K_ℓ+2)`
fn shrink_all(widths: &[usize]) -> f64 {
    prod(widths.iter().map(|&k| k as f64 / (k as f64 + 2.0)))
}

/// `∏_{ℓ=0}^{L-1} K_ℓ(K_ℓ+2)`
fn growth_all(widths: &[usize]) -> f64 {
    prod(widths.iter().map(|&k| (k * (k + 2)) as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedFormReport {
    /// `M = n² ∏ K_ℓ(K_ℓ+2)`
    #[serde(rename = "M")]
    pub normalizer: f64,
    /// `E[n Σ‖∇f_i‖²]`
    pub e_n_sum_sq: f64,
    /// `E[Σ_{i≠j} ⟨∇f_i, ∇f_j⟩]`
    pub e_cross: f64,
    /// `E[‖Σ∇f_i‖²] = e_n_sum_sq/n + e_cross`
    pub e_norm_of_sum: f64,
    /// `ρ = e_n_sum_sq / e_norm_of_sum`
    pub rho: f64,
    /// Width/depth lower bound on ρ.
    pub rho_lower_bound: f64,
}

/// `E[n Σ‖∇f_i‖²] = M·L·(1 + ∏_{ℓ=1}^{L-1} K_ℓ/(K_ℓ+2))`. Defined for any
/// positive widths.
pub fn expected_n_sum_sq(widths: &[usize], n: usize) -> Result<f64> {
    check_widths(widths)?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let l = widths.len() as f64;
    let m = (n * n) as f64 * growth_all(widths);
    let inner = prod(widths[1..].iter().map(|&k| k as f64 / (k as f64 + 2.0)));
    Ok(m * l * (1.0 + inner))
}

/// `E[Σ_{i≠j}⟨∇f_i,∇f_j⟩] = M·(n−1)/n·(Σ_φ (L−φ)/(K_φ−1) ∏_{ℓ≤φ}(K_ℓ−1)/(K_ℓ+2) + L/K_0·∏ K_ℓ/(K_ℓ+2))`.
/// Needs every `K_ℓ >= 2`.
pub fn expected_cross(widths: &[usize], n: usize) -> Result<f64> {
    check_widths(widths)?;
    check_cross_widths(widths)?;
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let l = widths.len();
    let nf = n as f64;
    let m = nf * nf * growth_all(widths);
    let series = cross_series(widths, l - 1, |phi| (l - phi) as f64);
    let tail = l as f64 / widths[0] as f64 * shrink_all(widths);
    Ok(m * (nf - 1.0) / nf * (series + tail))
}

/// Both total expectations for a Gaussian linear network with `n` examples,
/// plus ρ and its lower bound.
pub fn mullnn_expectations(widths: &[usize], n: usize) -> Result<ClosedFormReport> {
    let e_n_sum_sq = expected_n_sum_sq(widths, n)?;
    let e_cross = expected_cross(widths, n)?;
    let nf = n as f64;
    let e_norm_of_sum = e_n_sum_sq / nf + e_cross;
    Ok(ClosedFormReport {
        normalizer: nf * nf * growth_all(widths),
        e_n_sum_sq,
        e_cross,
        e_norm_of_sum,
        rho: e_n_sum_sq / e_norm_of_sum,
        rho_lower_bound: lnn_ratio_lower_bound(widths)?,
    })
}

/// `ρ ≥ L / (Σ_{φ=1}^{L-1} (L−φ)/(K_φ−1) + 2L/(d−1))`.
pub fn lnn_ratio_lower_bound(widths: &[usize]) -> Result<f64> {
    check_widths(widths)?;
    if widths.iter().any(|&k| k < 2) {
        return Err(Error::invalid(format!(
            "the bound needs every width >= 2, got {widths:?}"
        )));
    }
    let l = widths.len();
    let series: f64 = (1..l)
        .map(|phi| (l - phi) as f64 / (widths[phi] as f64 - 1.0))
        .sum();
    let d = widths[0] as f64;
    Ok(l as f64 / (series + 2.0 * l as f64 / (d - 1.0)))
}

/// Equal hidden widths: `ρ ≥ 1 / ((L−1)/(2(K−1)) + 2/(d−1))`.
pub fn equal_width_bound(d: usize, k: usize, l: usize) -> Result<f64> {
    if d < 2 || k < 2 || l < 2 {
        return Err(Error::invalid(format!(
            "need d, K, L >= 2, got d={d}, K={k}, L={l}"
        )));
    }
    let (d, k, l) = (d as f64, k as f64, l as f64);
    Ok(1.0 / ((l - 1.0) / (2.0 * (k - 1.0)) + 2.0 / (d - 1.0)))
}

/// Per-entry expectations for the gradient block of layer `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerLayerExpectation {
    pub layer: usize,
    /// `E[(∂f_i/∂W_{a,p,q})²]`
    pub sq_entry: f64,
    /// `E[∂f_i/∂W_{a,p,q} · ∂f_j/∂W_{a,p,q}]`, `i ≠ j`
    pub cross_entry: f64,
    /// Number of entries `K_a·K_{a-1}` in the block.
    pub entries: usize,
}

fn width_at(widths: &[usize], idx: usize) -> usize {
    // K_L = 1
    widths.get(idx).copied().unwrap_or(1)
}

fn check_layer(widths: &[usize], a: usize) -> Result<()> {
    check_widths(widths)?;
    if a == 0 || a > widths.len() {
        return Err(Error::invalid(format!(
            "layer index {a} outside 1..={}",
            widths.len()
        )));
    }
    Ok(())
}

/// `E[(∂f_i/∂W_{a,p,q})²] = K_0(K_0+2)/(K_a K_{a-1}) · (∏_{ℓ=1}^{L-1} K_ℓ(K_ℓ+2) + ∏_{ℓ=1}^{L-1} K_ℓ²)`.
pub fn per_layer_sq_entry(widths: &[usize], a: usize) -> Result<f64> {
    check_layer(widths, a)?;
    let k0 = widths[0] as f64;
    let ka = width_at(widths, a) as f64;
    let kprev = widths[a - 1] as f64;
    let grow = prod(widths[1..].iter().map(|&k| (k * (k + 2)) as f64));
    let sq = prod(widths[1..].iter().map(|&k| (k * k) as f64));
    Ok(k0 * (k0 + 2.0) / (ka * kprev) * (grow + sq))
}

/// `E[∂f_i/∂W_{a,p,q}·∂f_j/∂W_{a,p,q}] = ∏K_ℓ(K_ℓ+2)/(K_a K_{a-1}) · (Σ_{φ<a} 1/(K_φ−1) ∏_{ℓ≤φ}(K_ℓ−1)/(K_ℓ+2) + 1/K_0 ∏K_ℓ/(K_ℓ+2))`.
pub fn per_layer_cross_entry(widths: &[usize], a: usize) -> Result<f64> {
    check_layer(widths, a)?;
    check_cross_widths(widths)?;
    let ka = width_at(widths, a) as f64;
    let kprev = widths[a - 1] as f64;
    let series = cross_series(widths, a - 1, |_| 1.0);
    let tail = shrink_all(widths) / widths[0] as f64;
    Ok(growth_all(widths) / (ka * kprev) * (series + tail))
}

pub fn per_layer_expectations(widths: &[usize], a: usize) -> Result<PerLayerExpectation> {
    Ok(PerLayerExpectation {
        layer: a,
        sq_entry: per_layer_sq_entry(widths, a)?,
        cross_entry: per_layer_cross_entry(widths, a)?,
        entries: width_at(widths, a) * widths[a - 1],
    })
}

/// `E‖∇f_i‖² = L·K_0(K_0+2)·(∏_{ℓ≥1} K_ℓ(K_ℓ+2) + ∏_{ℓ≥1} K_ℓ²)`.
pub fn per_example_sq_norm(widths: &[usize]) -> Result<f64> {
    Ok(expected_n_sum_sq(widths, 1)?)
}

/// Second and fourth moments of the weight and data distributions for the
/// two-layer entry formulas. Student layers share `m_w2`/`m_w4`; teacher
/// layers share `m_wstar2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentProfile {
    pub m_w2: f64,
    pub m_w4: f64,
    pub m_x2: f64,
    pub m_x4: f64,
    pub m_wstar2: f64,
}

impl MomentProfile {
    pub fn new(m_w2: f64, m_w4: f64, m_x2: f64, m_x4: f64, m_wstar2: f64) -> Result<Self> {
        let p = Self {
            m_w2,
            m_w4,
            m_x2,
            m_x4,
            m_wstar2,
        };
        let all = [m_w2, m_w4, m_x2, m_x4, m_wstar2];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("even moments must be positive and finite"));
        }
        if m_w4 < m_w2 * m_w2 || m_x4 < m_x2 * m_x2 {
            return Err(Error::invalid(
                "fourth moment below squared second moment",
            ));
        }
        Ok(p)
    }

    pub fn standard_normal() -> Self {
        Self {
            m_w2: 1.0,
            m_w4: 3.0,
            m_x2: 1.0,
            m_x4: 3.0,
            m_wstar2: 1.0,
        }
    }

    /// Centered Gaussians with the given variances.
    pub fn gaussian(var_w: f64, var_x: f64, var_wstar: f64) -> Result<Self> {
        Self::new(var_w, 3.0 * var_w * var_w, var_x, 3.0 * var_x * var_x, var_wstar)
    }
}

/// Exact per-entry expectations of a two-layer linear network (`K` hidden
/// units, input dimension `d`) under general moments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoLayerEntryExpectations {
    /// `E[(∂f_i/∂W_{1,p,q})²]`
    pub sq_first_layer: f64,
    /// `E[(∂f_i/∂W_{2,1,q})²]`
    pub sq_output_layer: f64,
    /// `E[∂f_i/∂W_{1,p,q}·∂f_j/∂W_{1,p,q}]`, `i ≠ j`
    pub cross_first_layer: f64,
    /// `E[∂f_i/∂W_{2,1,q}·∂f_j/∂W_{2,1,q}]`, `i ≠ j`
    pub cross_output_layer: f64,
}

pub fn two_layer_entry_expectations(
    m: MomentProfile,
    k: usize,
    d: usize,
) -> Result<TwoLayerEntryExpectations> {
    if k == 0 || d == 0 {
        return Err(Error::invalid("K and d must be positive"));
    }
    let (k, d) = (k as f64, d as f64);
    let MomentProfile {
        m_w2,
        m_w4,
        m_x2,
        m_x4,
        m_wstar2,
    } = m;
    // E[x_q² ‖x‖²]-type factor shared by the squared terms
    let x_sq_norm = (d - 1.0) * m_x2 * m_x2 + m_x4;

    let sq_first_layer = m_w2 * ((k - 1.0) * m_w2 * m_w2 + m_w4) * x_sq_norm
        + m_wstar2 * k * m_wstar2 * m_w2 * x_sq_norm;

    // (W_{1,s}·x)²(W_{1,q}·x)²: s ≠ q and s = q (Isserlis) cases
    let distinct_rows = d * m_w2 * m_w2 * x_sq_norm;
    let same_row = d * m_w4 * m_x4 + 3.0 * d * (d - 1.0) * m_w2 * m_w2 * m_x2 * m_x2;
    let sq_output_layer = m_w2 * ((k - 1.0) * distinct_rows + same_row)
        + k * m_wstar2 * m_wstar2 * m_w2 * d * ((d - 1.0) * m_x2 * m_x2 + m_x4);

    let cross_first_layer = m_w2 * ((k - 1.0) * m_w2 * m_w2 + m_w4) * m_x2 * m_x2
        + m_wstar2 * k * m_w2 * m_wstar2 * m_x2 * m_x2;

    let cross_output_layer = m_w2
        * ((k - 1.0) * d * m_w2 * m_w2 * m_x2 * m_x2
            + d * m_w4 * m_x2 * m_x2
            + d * (d - 1.0) * m_w2 * m_w2 * m_x2 * m_x2)
        + k * d * m_wstar2 * m_wstar2 * m_w2 * m_x2 * m_x2;

    Ok(TwoLayerEntryExpectations {
        sq_first_layer,
        sq_output_layer,
        cross_first_layer,
        cross_output_layer,
    })
}

/// `K d² / (K d + K + d)`: shape of the two-layer nonlinear lower bound on
/// the ratio of expectations (order only).
pub fn nonlinear_ratio_bound(k: usize, d: usize) -> Result<f64> {
    if k == 0 || d == 0 {
        return Err(Error::invalid("K and d must be positive"));
    }
    let (k, d) = (k as f64, d as f64);
    Ok(k * d * d / (k * d + k + d))
}

/// `n K d / (K n + d n + K d)`: shape of the two-layer linear batch-size
/// bound (order only).
pub fn two_layer_lnn_batch_ratio(k: usize, d: usize, n: usize) -> Result<f64> {
    if k == 0 || d == 0 || n == 0 {
        return Err(Error::invalid("K, d and n must be positive"));
    }
    let (k, d, n) = (k as f64, d as f64, n as f64);
    Ok(n * k * d / (k * n + d * n + k * d))
}

/// Large-`n` limit of [`two_layer_lnn_batch_ratio`]: `K d / (K + d)`.
pub fn two_layer_lnn_batch_ratio_limit(k: usize, d: usize) -> Result<f64> {
    if k == 0 || d == 0 {
        return Err(Error::invalid("K and d must be positive"));
    }
    let (k, d) = (k as f64, d as f64);
    Ok(k * d / (k + d))
}
