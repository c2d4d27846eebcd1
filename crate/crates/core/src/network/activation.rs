use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Linear,
    Tanh,
    Softsign,
    Arctan,
    Relu,
}

/// Grid used to bound `sup_x x·σ'(x)`.
const SUP_GRID_HALF_WIDTH: f64 = 100.0;
const SUP_GRID_STEP: f64 = 1e-3;

impl ActivationKind {
    pub const ALL: [ActivationKind; 5] = [
        ActivationKind::Linear,
        ActivationKind::Tanh,
        ActivationKind::Softsign,
        ActivationKind::Arctan,
        ActivationKind::Relu,
    ];

    /// Activations covered by the two-layer nonlinear bound (odd, monotone,
    /// bounded, with finite `sup x·σ'(x)`).
    pub const BOUNDED_ODD: [ActivationKind; 3] = [
        ActivationKind::Tanh,
        ActivationKind::Softsign,
        ActivationKind::Arctan,
    ];

    /// `(σ(x), σ'(x))`. ReLU uses derivative 0 at the kink.
    #[inline]
    pub fn eval(self, x: f64) -> (f64, f64) {
        match self {
            ActivationKind::Linear => (x, 1.0),
            ActivationKind::Tanh => {
                let t = x.tanh();
                (t, 1.0 - t * t)
            }
            ActivationKind::Softsign => {
                let d = 1.0 + x.abs();
                (x / d, 1.0 / (d * d))
            }
            ActivationKind::Arctan => (x.atan(), 1.0 / (1.0 + x * x)),
            ActivationKind::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Bound on `|σ(x)|`; `None` means unbounded.
    pub fn c_max(self) -> Option<f64> {
        match self {
            ActivationKind::Tanh | ActivationKind::Softsign => Some(1.0),
            ActivationKind::Arctan => Some(std::f64::consts::FRAC_PI_2),
            ActivationKind::Linear | ActivationKind::Relu => None,
        }
    }

    /// `max x·σ'(x)` over a grid on [-100, 100]; `None` for the unbounded
    /// activations, where the supremum is infinite.
    pub fn c_sup(self) -> Option<f64> {
        static CACHE: [OnceLock<f64>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        let slot = match self {
            ActivationKind::Tanh => 0,
            ActivationKind::Softsign => 1,
            ActivationKind::Arctan => 2,
            ActivationKind::Linear | ActivationKind::Relu => return None,
        };
        Some(*CACHE[slot].get_or_init(|| {
            let steps = (2.0 * SUP_GRID_HALF_WIDTH / SUP_GRID_STEP).round() as i64;
            (0..=steps)
                .map(|i| {
                    let x = -SUP_GRID_HALF_WIDTH + i as f64 * SUP_GRID_STEP;
                    x * self.eval(x).1
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }))
    }

    pub fn satisfies_nonlinear_hypotheses(self) -> bool {
        Self::BOUNDED_ODD.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Linear => "linear",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Softsign => "softsign",
            ActivationKind::Arctan => "arctan",
            ActivationKind::Relu => "relu",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivationKind::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown activation `{s}`")))
    }
}
