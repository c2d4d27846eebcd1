#![allow(dead_code)]

use graddiv::network::{forward_vec, per_example_gradient_target, ActivationKind, NetworkShape, WeightStack};
use graddiv::numerics::{fill_standard_normal, SeedKey};
use rand::Rng;

/// Five-point central difference step. Truncation error is O(h⁴).
const FD_STEP: f64 = 1e-5;

/// Pre-activations closer to 0 than this make a ReLU configuration resampled.
pub const RELU_MARGIN: f64 = 1e-4;

fn loss(w: &WeightStack, x: &[f64], y: &[f64]) -> f64 {
    let out = forward_vec(w, x).unwrap();
    0.5 * out.iter().zip(y).map(|(o, t)| (o - t) * (o - t)).sum::<f64>()
}

/// Pre-activations of every hidden unit, computed layer by layer.
pub fn hidden_preactivations(w: &WeightStack, x: &[f64]) -> Vec<f64> {
    let act = w.shape().activation();
    let mut h = x.to_vec();
    let mut all = Vec::new();
    for l in 1..w.shape().depth() {
        let z = w.layer(l).matvec(&h).unwrap();
        all.extend_from_slice(&z);
        h = z.iter().map(|&v| act.value(v)).collect();
    }
    all
}

/// A random network, input and target. Widths in 1..=6, 1 to 4 weight
/// matrices, 1 or 2 outputs.
pub fn random_config(act: ActivationKind, key: SeedKey) -> (WeightStack, Vec<f64>, Vec<f64>) {
    let mut rng = key.rng();
    let depth = rng.random_range(1..=4);
    let mut widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=6)).collect();
    widths.push(rng.random_range(1..=2));
    let shape = NetworkShape::new(widths, act).unwrap();
    let w = WeightStack::sample_gaussian(&shape, key.named("weights"));
    let mut x = vec![0.0; shape.input_dim()];
    fill_standard_normal(&mut rng, &mut x);
    let mut y = vec![0.0; shape.output_dim()];
    fill_standard_normal(&mut rng, &mut y);
    (w, x, y)
}

/// Largest per-coordinate error of backprop against finite differences,
/// measured as `|g − fd| / max(|g|, |fd|, 1)`.
pub fn fd_max_error(w: &WeightStack, x: &[f64], y: &[f64]) -> f64 {
    let g = per_example_gradient_target(w, x, y).unwrap().gradient;
    let flat = w.flatten();
    let at = |i: usize, delta: f64| {
        let mut p = flat.clone();
        p[i] += delta;
        loss(&WeightStack::from_flat(w.shape(), &p).unwrap(), x, y)
    };
    let h = FD_STEP;
    (0..flat.len())
        .map(|i| {
            let fd = (-at(i, 2.0 * h) + 8.0 * at(i, h) - 8.0 * at(i, -h) + at(i, -2.0 * h)) / (12.0 * h);
            (g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Draws configurations from `key` until one is admissible (ReLU nets need
/// every pre-activation at least `RELU_MARGIN` from 0) and returns its
/// finite-difference error.
pub fn fd_check(act: ActivationKind, key: SeedKey) -> f64 {
    for attempt in 0.. {
        let (w, x, y) = random_config(act, key.child(attempt));
        if act == ActivationKind::Relu && hidden_preactivations(&w, &x).iter().any(|z| z.abs() < RELU_MARGIN) {
            continue;
        }
        return fd_max_error(&w, &x, &y);
    }
    unreachable!()
}

/// `n` gradients of length `dim` with N(0,1) entries.
pub fn random_gradients(n: usize, dim: usize, key: SeedKey) -> Vec<Vec<f64>> {
    let mut rng = key.rng();
    (0..n)
        .map(|_| {
            let mut g = vec![0.0; dim];
            fill_standard_normal(&mut rng, &mut g);
            g
        })
        .collect()
}

/// `Δ` computed directly from its definition with plain double loops.
pub fn naive_diversity(grads: &[Vec<f64>]) -> f64 {
    let dim = grads[0].len();
    let sum_sq: f64 = grads.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>()).sum();
    let norm_sq: f64 = (0..dim)
        .map(|k| {
            let s: f64 = grads.iter().map(|g| g[k]).sum();
            s * s
        })
        .sum();
    sum_sq / norm_sq
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
