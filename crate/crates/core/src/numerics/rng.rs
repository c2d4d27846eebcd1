use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Generator behind every [`SeedKey`]. ChaCha supports 2⁶⁴ independent
/// streams per seed, so a key maps to one `(seed, stream)` pair.
pub type TrialRng = ChaCha8Rng;

/// Identifies one reproducible random stream.
///
/// Child keys are derived by mixing the parent's `(root_seed, stream_index)`
/// into a new root and using the child index as the stream, so a tree of keys
/// can be handed out to concurrent workers without coordination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedKey {
    pub root_seed: u64,
    pub stream_index: u64,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedKey {
    pub const fn new(root_seed: u64) -> Self {
        Self {
            root_seed,
            stream_index: 0,
        }
    }

    pub fn child(&self, index: u64) -> SeedKey {
        SeedKey {
            root_seed: splitmix64(self.root_seed ^ splitmix64(self.stream_index)),
            stream_index: index,
        }
    }

    /// Child keyed by a label, for readable call sites (`key.named("teacher")`).
    pub fn named(&self, label: &str) -> SeedKey {
        // FNV-1a
        let h = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        });
        self.child(h)
    }

    pub fn rng(&self) -> TrialRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out {
        *v = rng.sample(StandardNormal);
    }
}

/// Matrix of i.i.d. N(0,1) entries drawn from the stream of `key`.
pub fn gaussian_matrix(rows: usize, cols: usize, key: SeedKey) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "gaussian matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    let mut data = vec![0.0; rows * cols];
    fill_standard_normal(&mut key.rng(), &mut data);
    Matrix::new(rows, cols, data)
}
