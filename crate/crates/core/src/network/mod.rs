//! Fully-connected networks `ŷ = W_L σ(⋯σ(W_1 x))` with square loss and exact
//! per-example gradients by backpropagation.
//!
//! Gradients are flat vectors laid out layer-major (`W_1` first), row-major
//! within each layer, so `grad[offset_ℓ + p·K_{ℓ-1} + q] = ∂f/∂W_{ℓ,p,q}`.

mod activation;
mod dataset;
mod shape;
mod weights;

pub use activation::ActivationKind;
pub use dataset::{Dataset, Targets};
pub use shape::NetworkShape;
pub use weights::WeightStack;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, tree_reduce, Execution};
use crate::numerics::{neumaier_sum, SeedKey};

/// Loss `f_i = ½‖ŷ_i − y_i‖²`, its gradient and the network outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientRecord {
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl GradientRecord {
    /// Scalar prediction `ŷ_i` (first output unit).
    pub fn prediction(&self) -> f64 {
        self.outputs[0]
    }
}

/// Reusable forward/backward buffers for one network shape.
#[derive(Clone, Debug)]
pub struct Backprop {
    act: ActivationKind,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    deriv: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
    offsets: Vec<usize>,
}

impl Backprop {
    pub fn new(shape: &NetworkShape) -> Self {
        let bufs = || shape.widths().iter().map(|&k| vec![0.0; k]).collect::<Vec<_>>();
        Self {
            act: shape.activation(),
            pre: bufs(),
            post: bufs(),
            deriv: bufs(),
            delta: bufs(),
            offsets: shape.layer_offsets(),
        }
    }

    fn check(&self, w: &WeightStack, x: &[f64]) -> Result<()> {
        if x.len() != w.shape().input_dim() {
            return Err(Error::invalid(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                w.shape().input_dim()
            )));
        }
        if w.shape().widths().len() != self.post.len() || w.shape().activation() != self.act {
            return Err(Error::invalid("workspace built for a different shape"));
        }
        Ok(())
    }

    /// Runs the forward pass and returns the output vector.
    pub fn forward(&mut self, w: &WeightStack, x: &[f64]) -> Result<&[f64]> {
        self.check(w, x)?;
        self.forward_unchecked(w, x);
        Ok(self.post.last().unwrap())
    }

    fn forward_unchecked(&mut self, w: &WeightStack, x: &[f64]) {
        let depth = w.shape().depth();
        self.post[0].copy_from_slice(x);
        for l in 1..=depth {
            let (before, after) = self.post.split_at_mut(l);
            let input = &before[l - 1];
            let pre = &mut self.pre[l];
            w.layer(l).matvec_into(input, pre);
            let out = &mut after[0];
            if l == depth {
                out.copy_from_slice(pre);
            } else {
                for ((o, d), &z) in out.iter_mut().zip(self.deriv[l].iter_mut()).zip(pre.iter()) {
                    let (v, dv) = self.act.eval(z);
                    *o = v;
                    *d = dv;
                }
            }
        }
    }

    /// Forward + backward. Writes `∇f` into `grad` and returns the loss.
    pub fn gradient(
        &mut self,
        w: &WeightStack,
        x: &[f64],
        target: &[f64],
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check(w, x)?;
        if target.len() != w.shape().output_dim() {
            return Err(Error::invalid(format!(
                "target has dimension {}, network outputs {}",
                target.len(),
                w.shape().output_dim()
            )));
        }
        if grad.len() != w.param_count() {
            return Err(Error::invalid("gradient buffer has the wrong length"));
        }
        Ok(self.gradient_unchecked(w, x, target, grad))
    }

    fn gradient_unchecked(
        &mut self,
        w: &WeightStack,
        x: &[f64],
        target: &[f64],
        grad: &mut [f64],
    ) -> f64 {
        let depth = w.shape().depth();
        self.forward_unchecked(w, x);
        let mut loss = 0.0;
        for ((d, &o), &t) in self.delta[depth]
            .iter_mut()
            .zip(self.post[depth].iter())
            .zip(target)
        {
            *d = o - t;
            loss += *d * *d;
        }
        for l in (1..=depth).rev() {
            let cols = self.post[l - 1].len();
            let block = &mut grad[self.offsets[l - 1]..self.offsets[l]];
            for (row, &dp) in block.chunks_exact_mut(cols).zip(self.delta[l].iter()) {
                for (g, &a) in row.iter_mut().zip(self.post[l - 1].iter()) {
                    *g = dp * a;
                }
            }
            if l > 1 {
                let (lo, hi) = self.delta.split_at_mut(l);
                let back = &mut lo[l - 1];
                w.layer(l).matvec_t_into(&hi[0], back);
                for (b, &d) in back.iter_mut().zip(self.deriv[l - 1].iter()) {
                    *b *= d;
                }
            }
        }
        0.5 * loss
    }

    pub fn outputs(&self) -> &[f64] {
        self.post.last().unwrap()
    }
}

pub fn forward_vec(weights: &WeightStack, x: &[f64]) -> Result<Vec<f64>> {
    let mut bp = Backprop::new(weights.shape());
    Ok(bp.forward(weights, x)?.to_vec())
}

/// Scalar network output `ŷ`.
pub fn forward(weights: &WeightStack, x: &[f64]) -> Result<f64> {
    if weights.shape().output_dim() != 1 {
        return Err(Error::invalid("forward() needs a scalar-output network"));
    }
    Ok(forward_vec(weights, x)?[0])
}

/// Gradient of `½(ŷ − y)²` for a scalar-output network.
pub fn per_example_gradient(weights: &WeightStack, x: &[f64], y: f64) -> Result<GradientRecord> {
    if weights.shape().output_dim() != 1 {
        return Err(Error::invalid(
            "per_example_gradient() needs a scalar-output network",
        ));
    }
    per_example_gradient_target(weights, x, &[y])
}

/// Gradient of `½‖ŷ − y‖²` for any output width.
pub fn per_example_gradient_target(
    weights: &WeightStack,
    x: &[f64],
    target: &[f64],
) -> Result<GradientRecord> {
    let mut bp = Backprop::new(weights.shape());
    let mut gradient = vec![0.0; weights.param_count()];
    let loss = bp.gradient(weights, x, target, &mut gradient)?;
    Ok(GradientRecord {
        loss,
        gradient,
        outputs: bp.outputs().to_vec(),
    })
}

fn check_data(weights: &WeightStack, data: &Dataset) -> Result<()> {
    if data.dim() != weights.shape().input_dim() {
        return Err(Error::invalid(format!(
            "dataset dimension {} does not match network input {}",
            data.dim(),
            weights.shape().input_dim()
        )));
    }
    if data.target_dim() != weights.shape().output_dim() {
        return Err(Error::invalid(format!(
            "dataset targets have width {} but the network outputs {}",
            data.target_dim(),
            weights.shape().output_dim()
        )));
    }
    Ok(())
}

const EXAMPLE_CHUNK: usize = 64;

/// Per-example gradients for `indices` (duplicates allowed), in order.
pub fn batch_gradients(
    weights: &WeightStack,
    data: &Dataset,
    indices: &[usize],
) -> Result<Vec<GradientRecord>> {
    batch_gradients_with(Execution::Parallel, weights, data, indices)
}

pub fn batch_gradients_with(
    exec: Execution,
    weights: &WeightStack,
    data: &Dataset,
    indices: &[usize],
) -> Result<Vec<GradientRecord>> {
    check_data(weights, data)?;
    if let Some(&bad) = indices.iter().find(|&&i| i >= data.len()) {
        return Err(Error::invalid(format!(
            "index {bad} out of range for {} examples",
            data.len()
        )));
    }
    let chunks = indices.len().div_ceil(EXAMPLE_CHUNK);
    let out = map_indexed(exec, chunks, |c| {
        let mut bp = Backprop::new(weights.shape());
        let mut target = vec![0.0; data.target_dim()];
        indices[c * EXAMPLE_CHUNK..((c + 1) * EXAMPLE_CHUNK).min(indices.len())]
            .iter()
            .map(|&i| {
                data.target_into(i, &mut target);
                let mut gradient = vec![0.0; weights.param_count()];
                let loss = bp.gradient_unchecked(weights, data.input(i), &target, &mut gradient);
                GradientRecord {
                    loss,
                    gradient,
                    outputs: bp.outputs().to_vec(),
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(out.into_iter().flatten().collect())
}

/// Per-chunk fold over the gradients of `indices`. Chunks may run
/// concurrently; their states are returned in chunk order.
pub(crate) fn fold_gradients<A, I, S>(
    exec: Execution,
    weights: &WeightStack,
    data: &Dataset,
    indices: &[usize],
    init: I,
    step: S,
) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    S: Fn(&mut A, f64, &[f64]) + Sync + Send,
{
    check_data(weights, data)?;
    if let Some(&bad) = indices.iter().find(|&&i| i >= data.len()) {
        return Err(Error::invalid(format!(
            "index {bad} out of range for {} examples",
            data.len()
        )));
    }
    Ok(map_indexed(exec, indices.len().div_ceil(EXAMPLE_CHUNK), |c| {
        let mut bp = Backprop::new(weights.shape());
        let mut target = vec![0.0; data.target_dim()];
        let mut g = vec![0.0; weights.param_count()];
        let mut acc = init();
        for &i in &indices[c * EXAMPLE_CHUNK..((c + 1) * EXAMPLE_CHUNK).min(indices.len())] {
            data.target_into(i, &mut target);
            let loss = bp.gradient_unchecked(weights, data.input(i), &target, &mut g);
            step(&mut acc, loss, &g);
        }
        acc
    }))
}

/// `Σ_{i ∈ indices} ∇f_i` written into `out`; returns `Σ f_i`. Duplicates in
/// `indices` count once per occurrence. The reduction order is fixed.
pub fn gradient_sum_with(
    exec: Execution,
    weights: &WeightStack,
    data: &Dataset,
    indices: &[usize],
    out: &mut [f64],
) -> Result<f64> {
    if out.len() != weights.param_count() {
        return Err(Error::invalid("gradient buffer has the wrong length"));
    }
    let p = weights.param_count();
    let parts = fold_gradients(
        exec,
        weights,
        data,
        indices,
        || (vec![0.0; p], 0.0),
        |(sum, loss), l, g| {
            *loss += l;
            for (s, v) in sum.iter_mut().zip(g) {
                *s += v;
            }
        },
    )?;
    let (sum, loss) = tree_reduce(parts, |(mut a, la), (b, lb)| {
        for (x, y) in a.iter_mut().zip(&b) {
            *x += y;
        }
        (a, la + lb)
    })
    .unwrap_or_else(|| (vec![0.0; p], 0.0));
    out.copy_from_slice(&sum);
    Ok(loss)
}

/// Mean training loss and, for classification, argmax accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: Option<f64>,
}

pub fn evaluate(weights: &WeightStack, data: &Dataset) -> Result<Metrics> {
    evaluate_with(Execution::Parallel, weights, data)
}

pub fn evaluate_with(exec: Execution, weights: &WeightStack, data: &Dataset) -> Result<Metrics> {
    check_data(weights, data)?;
    let n = data.len();
    let chunk = 256;
    let parts = map_indexed(exec, n.div_ceil(chunk), |c| {
        let mut bp = Backprop::new(weights.shape());
        let mut target = vec![0.0; data.target_dim()];
        let mut loss = Vec::with_capacity(chunk);
        let mut correct = 0usize;
        for i in c * chunk..((c + 1) * chunk).min(n) {
            data.target_into(i, &mut target);
            bp.forward_unchecked(weights, data.input(i));
            let out = bp.outputs();
            loss.push(
                0.5 * out
                    .iter()
                    .zip(&target)
                    .map(|(o, t)| (o - t) * (o - t))
                    .sum::<f64>(),
            );
            if let Targets::Classes { labels, .. } = data.targets() {
                if argmax(out) == labels[i] as usize {
                    correct += 1;
                }
            }
        }
        (neumaier_sum(loss), correct)
    });
    let loss = neumaier_sum(parts.iter().map(|p| p.0)) / n as f64;
    let accuracy = data
        .is_classification()
        .then(|| parts.iter().map(|p| p.1).sum::<usize>() as f64 / n as f64);
    Ok(Metrics { loss, accuracy })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Teacher network with i.i.d. N(0,1) weights.
pub fn sample_teacher(shape: &NetworkShape, key: SeedKey) -> WeightStack {
    WeightStack::sample_gaussian(shape, key)
}
