use rand_distr::{Distribution, Normal};

use super::NetworkShape;
use crate::error::{Error, Result};
use crate::numerics::{fill_standard_normal, Matrix, SeedKey};

/// The model `w = (W_1, …, W_L)`, `W_ℓ` of shape `K_ℓ × K_{ℓ-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightStack {
    shape: NetworkShape,
    layers: Vec<Matrix>,
}

impl WeightStack {
    pub fn from_layers(shape: NetworkShape, layers: Vec<Matrix>) -> Result<Self> {
        if layers.len() != shape.depth() {
            return Err(Error::invalid(format!(
                "shape has {} layers but {} matrices were given",
                shape.depth(),
                layers.len()
            )));
        }
        for (i, m) in layers.iter().enumerate() {
            let (r, c) = shape.layer_dims(i + 1);
            if (m.rows(), m.cols()) != (r, c) {
                return Err(Error::invalid(format!(
                    "W_{} is {}x{}, expected {r}x{c}",
                    i + 1,
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(Self { shape, layers })
    }

    pub fn zeros(shape: &NetworkShape) -> Self {
        let layers = (1..=shape.depth())
            .map(|l| {
                let (r, c) = shape.layer_dims(l);
                Matrix::zeros(r, c).expect("shape widths are positive")
            })
            .collect();
        Self {
            shape: shape.clone(),
            layers,
        }
    }

    /// Every entry i.i.d. N(0,1); layer `ℓ` draws from `key.child(ℓ)`.
    pub fn sample_gaussian(shape: &NetworkShape, key: SeedKey) -> Self {
        let mut w = Self::zeros(shape);
        for (l, m) in w.layers.iter_mut().enumerate() {
            fill_standard_normal(&mut key.child(l as u64 + 1).rng(), m.as_mut_slice());
        }
        w
    }

    /// Training initialization: `W_ℓ` entries N(0, 1/K_{ℓ-1}).
    pub fn init_scaled(shape: &NetworkShape, key: SeedKey) -> Self {
        let mut w = Self::zeros(shape);
        for (l, m) in w.layers.iter_mut().enumerate() {
            let fan_in = shape.widths()[l] as f64;
            let dist = Normal::new(0.0, fan_in.sqrt().recip()).expect("positive std");
            let mut rng = key.child(l as u64 + 1).rng();
            for v in m.as_mut_slice() {
                *v = dist.sample(&mut rng);
            }
        }
        w
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    /// `W_ℓ`, `layer` in `1..=L`.
    pub fn layer(&self, layer: usize) -> &Matrix {
        &self.layers[layer - 1]
    }

    pub fn layer_mut(&mut self, layer: usize) -> &mut Matrix {
        &mut self.layers[layer - 1]
    }

    pub fn param_count(&self) -> usize {
        self.shape.param_count()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|m| m.as_slice().iter().copied())
            .collect()
    }

    pub fn from_flat(shape: &NetworkShape, flat: &[f64]) -> Result<Self> {
        if flat.len() != shape.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                shape.param_count(),
                flat.len()
            )));
        }
        let mut w = Self::zeros(shape);
        let mut off = 0;
        for m in &mut w.layers {
            let n = m.len();
            m.as_mut_slice().copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(w)
    }

    /// `w ← w + scale · direction`, `direction` in flat gradient layout.
    pub fn axpy(&mut self, scale: f64, direction: &[f64]) {
        debug_assert_eq!(direction.len(), self.param_count());
        let mut off = 0;
        for m in &mut self.layers {
            let n = m.len();
            for (w, d) in m.as_mut_slice().iter_mut().zip(&direction[off..off + n]) {
                *w += scale * d;
            }
            off += n;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Matrix::is_finite)
    }

    /// End-to-end matrix `W_L ⋯ W_1` (meaningful for linear networks).
    pub fn product(&self) -> Matrix {
        let mut acc = self.layers[0].clone();
        for m in &self.layers[1..] {
            acc = m.matmul(&acc).expect("layer dims chain");
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ActivationKind;

    #[test]
    fn chain_validation() {
        let s = NetworkShape::new(vec![2, 3, 1], ActivationKind::Linear).unwrap();
        let ok = vec![Matrix::zeros(3, 2).unwrap(), Matrix::zeros(1, 3).unwrap()];
        assert!(WeightStack::from_layers(s.clone(), ok).is_ok());
        let bad = vec![Matrix::zeros(2, 3).unwrap(), Matrix::zeros(1, 3).unwrap()];
        assert!(WeightStack::from_layers(s.clone(), bad).is_err());
        assert!(WeightStack::from_layers(s, vec![Matrix::zeros(3, 2).unwrap()]).is_err());
    }

    #[test]
    fn flat_round_trip_and_axpy() {
        let s = NetworkShape::new(vec![2, 3, 1], ActivationKind::Linear).unwrap();
        let w = WeightStack::sample_gaussian(&s, SeedKey::new(3));
        let flat = w.flatten();
        assert_eq!(WeightStack::from_flat(&s, &flat).unwrap(), w);
        let mut v = w.clone();
        v.axpy(-1.0, &flat);
        assert!(v.flatten().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = NetworkShape::new(vec![4, 4, 1], ActivationKind::Tanh).unwrap();
        let k = SeedKey::new(77);
        assert_eq!(
            WeightStack::sample_gaussian(&s, k),
            WeightStack::sample_gaussian(&s, k)
        );
        assert_ne!(
            WeightStack::sample_gaussian(&s, k),
            WeightStack::sample_gaussian(&s, k.child(1))
        );
    }
}
