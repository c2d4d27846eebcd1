use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{forward, ActivationKind, Dataset, NetworkShape, WeightStack};
use crate::numerics::{gaussian_matrix, SeedKey};

/// Teacher weight distribution for synthetic labels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherInit {
    /// Entries N(0,1).
    StandardNormal,
    /// Entries N(0,1/K_{ℓ-1}), so labels have unit scale at any depth.
    #[default]
    FanInScaled,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticOptions {
    pub teacher_init: TeacherInit,
    /// Permit a nonlinear teacher activation.
    pub allow_nonlinear: bool,
}

/// `n` inputs i.i.d. N(0,1)^d labelled by a linear teacher of the given
/// shape (fan-in scaled weights). Returns the data and the teacher.
pub fn make_synthetic(shape: &NetworkShape, n: usize, key: SeedKey) -> Result<(Dataset, WeightStack)> {
    make_synthetic_with(shape, n, key, SyntheticOptions::default())
}

pub fn make_synthetic_with(
    shape: &NetworkShape,
    n: usize,
    key: SeedKey,
    opts: SyntheticOptions,
) -> Result<(Dataset, WeightStack)> {
    if shape.activation() != ActivationKind::Linear && !opts.allow_nonlinear {
        return Err(Error::invalid(format!(
            "synthetic teachers are linear unless allow_nonlinear is set, got {}",
            shape.activation()
        )));
    }
    if shape.output_dim() != 1 {
        return Err(Error::invalid("synthetic regression needs a scalar-output teacher"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let teacher_key = key.named("teacher");
    let teacher = match opts.teacher_init {
        TeacherInit::StandardNormal => WeightStack::sample_gaussian(shape, teacher_key),
        TeacherInit::FanInScaled => WeightStack::init_scaled(shape, teacher_key),
    };
    let x = gaussian_matrix(n, shape.input_dim(), key.named("inputs"))?;
    let y = (0..n)
        .map(|i| forward(&teacher, x.row(i)))
        .collect::<Result<Vec<_>>>()?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("synthetic labels overflowed".into()));
    }
    Ok((Dataset::regression(x, y)?, teacher))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::evaluate;

    fn shape() -> NetworkShape {
        NetworkShape::new(vec![5, 4, 1], ActivationKind::Linear).unwrap()
    }

    #[test]
    fn teacher_fits_its_data() {
        let (d, t) = make_synthetic(&shape(), 200, SeedKey::new(1)).unwrap();
        assert!(evaluate(&t, &d).unwrap().loss <= 1e-20);
    }

    #[test]
    fn deterministic() {
        let a = make_synthetic(&shape(), 50, SeedKey::new(2)).unwrap();
        let b = make_synthetic(&shape(), 50, SeedKey::new(2)).unwrap();
        assert_eq!(a, b);
        let c = make_synthetic(&shape(), 50, SeedKey::new(3)).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn unit_input_variance() {
        let n = 10_000;
        let (d, _) = make_synthetic(&shape(), n, SeedKey::new(4)).unwrap();
        for q in 0..d.dim() {
            let col: Vec<f64> = (0..n).map(|i| d.input(i)[q]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
            assert!((v - 1.0).abs() < 0.05, "coordinate {q}: variance {v}");
        }
    }

    #[test]
    fn nonlinear_needs_flag() {
        let s = NetworkShape::new(vec![3, 3, 1], ActivationKind::Tanh).unwrap();
        assert!(make_synthetic(&s, 10, SeedKey::new(5)).is_err());
        let opts = SyntheticOptions {
            allow_nonlinear: true,
            ..Default::default()
        };
        assert!(make_synthetic_with(&s, 10, SeedKey::new(5), opts).is_ok());
    }
}
