use serde::Serialize;

use super::SeedKey;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, tree_reduce, Execution};

/// Trials per work item. Fixed so the trial → chunk mapping, and therefore
/// the reduction tree, never depends on the thread count.
const CHUNK: u64 = 256;

/// Streaming mean/variance (Welford), mergeable with Chan's update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Welford) -> Welford {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        Welford {
            count: n,
            mean: self.mean + delta * nb / n as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n as f64,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; `None` below two samples.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }

    pub fn estimate(&self) -> MCEstimate {
        MCEstimate {
            mean: self.mean,
            stderr: self
                .variance()
                .map(|v| (v.max(0.0) / self.count as f64).sqrt()),
            trials: self.count,
        }
    }
}

/// Multivariate Welford: running means plus the full co-moment matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentAccumulator {
    count: u64,
    mean: Vec<f64>,
    comoment: Vec<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        let dim = self.dim();
        debug_assert_eq!(x.len(), dim);
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, d) in self.mean.iter_mut().zip(&delta) {
            *m += d / n;
        }
        for i in 0..dim {
            for j in 0..dim {
                self.comoment[i * dim + j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
    }

    pub fn merge(self, other: MomentAccumulator) -> MomentAccumulator {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let dim = self.dim();
        let n = self.count + other.count;
        let (na, nb, nf) = (self.count as f64, other.count as f64, n as f64);
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        let mean = self
            .mean
            .iter()
            .zip(&delta)
            .map(|(a, d)| a + d * nb / nf)
            .collect();
        let mut comoment = self.comoment;
        for i in 0..dim {
            for j in 0..dim {
                comoment[i * dim + j] +=
                    other.comoment[i * dim + j] + delta[i] * delta[j] * na * nb / nf;
            }
        }
        MomentAccumulator {
            count: n,
            mean,
            comoment,
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    pub fn covariance(&self, i: usize, j: usize) -> Option<f64> {
        (self.count >= 2).then(|| self.comoment[i * self.dim() + j] / (self.count - 1) as f64)
    }
}

/// Sample mean with its standard error. `stderr` is `None` for a single trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: Option<f64>,
    pub trials: u64,
}

impl MCEstimate {
    /// `(mean - reference) / stderr`; `None` when stderr is unavailable or zero
    /// while the mean differs from the reference.
    pub fn z_score(&self, reference: f64) -> Option<f64> {
        let se = self.stderr?;
        let diff = self.mean - reference;
        if se > 0.0 {
            Some(diff / se)
        } else if diff == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }
}

/// Result of a vector-valued Monte Carlo run.
#[derive(Clone, Debug)]
pub struct MCSummary {
    acc: MomentAccumulator,
}

impl MCSummary {
    pub fn trials(&self) -> u64 {
        self.acc.count()
    }

    pub fn dim(&self) -> usize {
        self.acc.dim()
    }

    pub fn estimate(&self, i: usize) -> MCEstimate {
        let n = self.acc.count();
        MCEstimate {
            mean: self.acc.mean(i),
            stderr: self
                .acc
                .covariance(i, i)
                .map(|v| (v.max(0.0) / n as f64).sqrt()),
            trials: n,
        }
    }

    pub fn covariance(&self, i: usize, j: usize) -> Option<f64> {
        self.acc.covariance(i, j)
    }

    /// Ratio of means `mean_i / mean_j` with a delta-method standard error.
    pub fn ratio(&self, i: usize, j: usize) -> MCEstimate {
        let (mi, mj) = (self.acc.mean(i), self.acc.mean(j));
        let r = mi / mj;
        let n = self.acc.count() as f64;
        let stderr = match (
            self.acc.covariance(i, i),
            self.acc.covariance(j, j),
            self.acc.covariance(i, j),
        ) {
            (Some(vi), Some(vj), Some(cij)) => {
                let var = (vi - 2.0 * r * cij + r * r * vj) / (mj * mj * n);
                Some(var.max(0.0).sqrt())
            }
            _ => None,
        };
        MCEstimate {
            mean: r,
            stderr,
            trials: self.acc.count(),
        }
    }

    /// Estimate of a linear combination `Σ c_k · mean_k`.
    pub fn linear(&self, coeffs: &[(usize, f64)]) -> MCEstimate {
        let mean = coeffs.iter().map(|&(k, c)| c * self.acc.mean(k)).sum();
        let n = self.acc.count();
        let mut var = Some(0.0);
        for &(a, ca) in coeffs {
            for &(b, cb) in coeffs {
                var = match (var, self.acc.covariance(a, b)) {
                    (Some(v), Some(c)) => Some(v + ca * cb * c),
                    _ => None,
                };
            }
        }
        MCEstimate {
            mean,
            stderr: var.map(|v| (v.max(0.0) / n as f64).sqrt()),
            trials: n,
        }
    }
}

/// Runs `trials` independent trials of a vector-valued sampler.
///
/// Trial `t` receives `key.child(t)` and writes `dim` values into the buffer.
/// Trials are grouped into fixed-size chunks that may run concurrently; chunk
/// accumulators are merged in a fixed tree order, so the result is identical
/// for every thread count and for [`Execution::Sequential`].
pub fn mc_estimate_vec<F>(
    dim: usize,
    trials: u64,
    key: SeedKey,
    exec: Execution,
    sampler: F,
) -> Result<MCSummary>
where
    F: Fn(SeedKey, &mut [f64]) -> Result<()> + Sync + Send,
{
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::invalid("sampler dimension must be at least 1"));
    }
    let chunks = trials.div_ceil(CHUNK) as usize;
    let partials = map_indexed(exec, chunks, |c| -> Result<MomentAccumulator> {
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(trials);
        let mut acc = MomentAccumulator::new(dim);
        let mut buf = vec![0.0; dim];
        for t in start..end {
            sampler(key.child(t), &mut buf)?;
            if buf.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure { trial: t });
            }
            acc.push(&buf);
        }
        Ok(acc)
    });
    // first failing chunk in index order holds the lowest failing trial
    let partials = partials.into_iter().collect::<Result<Vec<_>>>()?;
    let acc = tree_reduce(partials, MomentAccumulator::merge).expect("at least one chunk");
    Ok(MCSummary { acc })
}

/// Scalar Monte Carlo estimate of `E[sampler(key)]`.
pub fn mc_estimate<F>(sampler: F, trials: u64, key: SeedKey) -> Result<MCEstimate>
where
    F: Fn(SeedKey) -> f64 + Sync + Send,
{
    let summary = mc_estimate_vec(1, trials, key, Execution::Parallel, |k, out| {
        out[0] = sampler(k);
        Ok(())
    })?;
    Ok(summary.estimate(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn constant_sampler() {
        let e = mc_estimate(|_| 7.0, 100, SeedKey::new(1)).unwrap();
        assert_eq!(e.mean, 7.0);
        assert_eq!(e.stderr, Some(0.0));
        assert_eq!(e.trials, 100);
    }

    #[test]
    fn single_trial_has_no_stderr() {
        let e = mc_estimate(|_| 3.0, 1, SeedKey::new(1)).unwrap();
        assert_eq!(e.stderr, None);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(matches!(
            mc_estimate(|_| 1.0, 0, SeedKey::new(1)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn non_finite_reports_trial() {
        let key = SeedKey::new(5);
        let bad = key.child(700);
        let err = mc_estimate(move |k| if k == bad { f64::NAN } else { 1.0 }, 1000, key)
            .unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { trial: 700 }));
    }

    #[test]
    fn squared_normal_has_unit_mean() {
        let e = mc_estimate(
            |k| {
                let z: f64 = k.rng().sample(StandardNormal);
                z * z
            },
            100_000,
            SeedKey::new(11),
        )
        .unwrap();
        let se = e.stderr.unwrap();
        assert!((e.mean - 1.0).abs() <= 4.0 * se, "{e:?}");
    }

    #[test]
    fn quadratic_form_mean() {
        // (aᵀx)² with a = (1, 2): expectation ‖a‖² = 5
        let e = mc_estimate(
            |k| {
                let mut rng = k.rng();
                let x0: f64 = rng.sample(StandardNormal);
                let x1: f64 = rng.sample(StandardNormal);
                (x0 + 2.0 * x1).powi(2)
            },
            100_000,
            SeedKey::new(12),
        )
        .unwrap();
        assert!((e.mean - 5.0).abs() <= 4.0 * e.stderr.unwrap(), "{e:?}");
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let sampler = |k: SeedKey, out: &mut [f64]| {
            let mut rng = k.rng();
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            out[0] = a * a;
            out[1] = a * b + 1.0;
            Ok(())
        };
        let p = mc_estimate_vec(2, 5000, SeedKey::new(3), Execution::Parallel, sampler).unwrap();
        let s = mc_estimate_vec(2, 5000, SeedKey::new(3), Execution::Sequential, sampler).unwrap();
        for i in 0..2 {
            assert_eq!(p.estimate(i).mean.to_bits(), s.estimate(i).mean.to_bits());
            assert_eq!(p.estimate(i).stderr, s.estimate(i).stderr);
        }
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..97).map(|i| (i as f64).sin() * 10.0).collect();
        let mut whole = Welford::new();
        xs.iter().for_each(|&x| whole.push(x));
        let (l, r) = xs.split_at(40);
        let mut a = Welford::new();
        let mut b = Welford::new();
        l.iter().for_each(|&x| a.push(x));
        r.iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert!((m.mean() - whole.mean()).abs() < 1e-12);
        assert!((m.variance().unwrap() - whole.variance().unwrap()).abs() < 1e-10);

        let mut acc = MomentAccumulator::new(1);
        xs.iter().for_each(|&x| acc.push(&[x]));
        assert!((acc.covariance(0, 0).unwrap() - whole.variance().unwrap()).abs() < 1e-10);
    }

    #[test]
    fn ratio_and_linear_combination() {
        let s = mc_estimate_vec(2, 4000, SeedKey::new(8), Execution::Parallel, |k, out| {
            let z: f64 = k.rng().sample(StandardNormal);
            out[0] = 2.0 + z;
            out[1] = 1.0 + 0.5 * z;
            Ok(())
        })
        .unwrap();
        // out0 = 2·out1 exactly, so the ratio is 2 with zero spread
        let r = s.ratio(0, 1);
        assert!((r.mean - 2.0).abs() < 1e-12);
        assert!(r.stderr.unwrap() < 1e-9);
        let lin = s.linear(&[(0, 1.0), (1, -2.0)]);
        assert!(lin.mean.abs() < 1e-12);
        assert!(lin.stderr.unwrap() < 1e-9);
    }
}
