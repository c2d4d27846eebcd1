use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ActivationKind, NetworkShape};

/// Fixed total weight count `p` traded between depth and width:
/// `d_in·K + (L−1)·K² + K·d_out = p` for `L` hidden layers of width `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBudget {
    pub p: usize,
    pub d_in: usize,
    pub d_out: usize,
}

impl ParamBudget {
    pub fn new(p: usize, d_in: usize, d_out: usize) -> Result<Self> {
        if p == 0 || d_in == 0 || d_out == 0 {
            return Err(Error::invalid("p, d_in and d_out must be positive"));
        }
        if p < d_in + d_out {
            return Err(Error::Infeasible(format!(
                "p = {p} cannot hold even one unit between d_in = {d_in} and d_out = {d_out}"
            )));
        }
        Ok(Self { p, d_in, d_out })
    }

    /// Weight count of `hidden` layers of width `k`.
    pub fn count(&self, hidden: usize, k: usize) -> usize {
        self.d_in * k + hidden.saturating_sub(1) * k * k + k * self.d_out
    }

    /// Network `[d_in, K × hidden, d_out]` with `K = solve_width(self, hidden)`.
    pub fn shape(&self, hidden: usize, activation: ActivationKind) -> Result<NetworkShape> {
        let k = solve_width(*self, hidden)?;
        let mut widths = vec![self.d_in];
        widths.extend(std::iter::repeat(k).take(hidden));
        widths.push(self.d_out);
        NetworkShape::new(widths, activation)
    }
}

/// Width `K` for `hidden ≥ 1` hidden layers: the positive root of
/// `(L−1)K² + (d_in+d_out)K − p = 0`, rounded to nearest with ties up.
pub fn solve_width(budget: ParamBudget, hidden: usize) -> Result<usize> {
    if hidden == 0 {
        return Err(Error::invalid("need at least one hidden layer"));
    }
    let p = budget.p as f64;
    let b = (budget.d_in + budget.d_out) as f64;
    let root = if hidden == 1 {
        p / b
    } else {
        let a = (hidden - 1) as f64;
        // stable form of (−b + √(b² + 4ap)) / 2a
        2.0 * p / (b + (b * b + 4.0 * a * p).sqrt())
    };
    let k = (root + 0.5).floor() as usize;
    if k == 0 {
        return Err(Error::Infeasible(format!(
            "budget {p} gives width {root:.3} < 1 at {hidden} hidden layers"
        )));
    }
    Ok(k)
}
