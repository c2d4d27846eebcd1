//! Dense small-matrix arithmetic, seeded Gaussian sampling and Monte Carlo
//! estimation with standard errors.

mod matrix;
mod mc;
mod moments;
mod rng;
mod sum;

pub use matrix::Matrix;
pub use mc::{mc_estimate, mc_estimate_vec, MCEstimate, MCSummary, MomentAccumulator, Welford};
pub use moments::standard_normal_moment;
pub use rng::{fill_standard_normal, gaussian_matrix, SeedKey, TrialRng};
pub use sum::{dot, neumaier_sum, squared_norm, CompensatedVec};
