use serde::{Deserialize, Serialize};

use super::ActivationKind;
use crate::error::{Error, Result};

/// Layer widths `K_0..K_L` (`K_0` is the input dimension) plus the hidden
/// activation. `L = widths.len() - 1` weight matrices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    widths: Vec<usize>,
    activation: ActivationKind,
}

impl NetworkShape {
    pub fn new(widths: Vec<usize>, activation: ActivationKind) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::invalid(format!(
                "a network needs at least an input and an output width, got {widths:?}"
            )));
        }
        if widths.iter().any(|&k| k == 0) {
            return Err(Error::invalid(format!("widths must be positive, got {widths:?}")));
        }
        Ok(Self { widths, activation })
    }

    /// Shape used by the closed-form results: `K_0..K_{L-1}` plus a single
    /// output unit.
    pub fn scalar_output(hidden: &[usize], activation: ActivationKind) -> Result<Self> {
        let mut widths = hidden.to_vec();
        widths.push(1);
        Self::new(widths, activation)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    /// Number of weight matrices `L`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// `(rows, cols)` of `W_layer`, `layer` in `1..=L`.
    pub fn layer_dims(&self, layer: usize) -> (usize, usize) {
        (self.widths[layer], self.widths[layer - 1])
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1]).sum()
    }

    /// Start offset of each layer's block in the flat gradient, plus the
    /// total length as the final element.
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.widths.len());
        offs.push(0);
        let mut acc = 0;
        for w in self.widths.windows(2) {
            acc += w[0] * w[1];
            offs.push(acc);
        }
        offs
    }

    /// Theory operations need `L >= 2` and a scalar output.
    pub fn check_theory(&self) -> Result<()> {
        if self.depth() < 2 {
            return Err(Error::invalid(format!(
                "closed forms need at least two layers, got L = {}",
                self.depth()
            )));
        }
        if self.output_dim() != 1 {
            return Err(Error::invalid(format!(
                "closed forms need a scalar output, got K_L = {}",
                self.output_dim()
            )));
        }
        Ok(())
    }
}
