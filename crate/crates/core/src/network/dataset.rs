use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    /// One real target per example.
    Regression(Vec<f64>),
    /// Class labels in `0..classes`; trained against one-hot vectors.
    Classes { labels: Vec<u32>, classes: usize },
}

/// Examples `(x_i, y_i)`, inputs stored as an `n × d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Matrix,
    targets: Targets,
}

impl Dataset {
    pub fn new(inputs: Matrix, targets: Targets) -> Result<Self> {
        let n = inputs.rows();
        let len = match &targets {
            Targets::Regression(y) => {
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("regression targets must be finite"));
                }
                y.len()
            }
            Targets::Classes { labels, classes } => {
                if *classes == 0 {
                    return Err(Error::invalid("need at least one class"));
                }
                if let Some(bad) = labels.iter().find(|&&l| l as usize >= *classes) {
                    return Err(Error::invalid(format!(
                        "label {bad} outside 0..{classes}"
                    )));
                }
                labels.len()
            }
        };
        if len != n {
            return Err(Error::invalid(format!(
                "{n} inputs but {len} targets"
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn regression(inputs: Matrix, y: Vec<f64>) -> Result<Self> {
        Self::new(inputs, Targets::Regression(y))
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    /// Width of the target vector: 1 for regression, the class count otherwise.
    pub fn target_dim(&self) -> usize {
        match &self.targets {
            Targets::Regression(_) => 1,
            Targets::Classes { classes, .. } => *classes,
        }
    }

    pub fn is_classification(&self) -> bool {
        matches!(self.targets, Targets::Classes { .. })
    }

    /// Writes the target vector of example `i` (one-hot for classes).
    pub fn target_into(&self, i: usize, out: &mut [f64]) {
        match &self.targets {
            Targets::Regression(y) => out[0] = y[i],
            Targets::Classes { labels, .. } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[labels[i] as usize] = 1.0;
            }
        }
    }

    /// First `n` examples.
    pub fn take(&self, n: usize) -> Result<Dataset> {
        if n == 0 || n > self.len() {
            return Err(Error::invalid(format!(
                "cannot take {n} of {} examples",
                self.len()
            )));
        }
        let d = self.dim();
        let inputs = Matrix::new(n, d, self.inputs.as_slice()[..n * d].to_vec())?;
        let targets = match &self.targets {
            Targets::Regression(y) => Targets::Regression(y[..n].to_vec()),
            Targets::Classes { labels, classes } => Targets::Classes {
                labels: labels[..n].to_vec(),
                classes: *classes,
            },
        };
        Dataset::new(inputs, targets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_and_targets() {
        let x = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(Dataset::regression(x.clone(), vec![1.0]).is_err());
        let bad = Targets::Classes {
            labels: vec![0, 3],
            classes: 3,
        };
        assert!(Dataset::new(x.clone(), bad).is_err());
        let d = Dataset::new(
            x,
            Targets::Classes {
                labels: vec![2, 0],
                classes: 3,
            },
        )
        .unwrap();
        let mut t = [9.0; 3];
        d.target_into(0, &mut t);
        assert_eq!(t, [0.0, 0.0, 1.0]);
        assert_eq!(d.target_dim(), 3);
        let head = d.take(1).unwrap();
        assert_eq!(head.len(), 1);
        assert!(d.take(3).is_err());
    }
}
