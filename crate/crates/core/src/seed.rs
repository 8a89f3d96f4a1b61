//! Stable seed splitting.
//!
//! Every random stream in the crate is a `ChaCha8Rng` seeded from a value
//! derived from a master seed and a path of integer labels (matrix size,
//! skew-diagonal, trial index, chunk index, ...). Streams never depend on how
//! many numbers another stream consumed, so work can be split across threads
//! without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a label path.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &label| splitmix64(acc ^ splitmix64(label.wrapping_add(GOLDEN))))
}

pub fn rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, path))
}

// Domain tags keep streams for different purposes apart.
pub(crate) const TAG_SKEW_DIAGONAL: u64 = 1;
pub(crate) const TAG_TRIAL: u64 = 2;
pub(crate) const TAG_MC_CHUNK: u64 = 3;
pub(crate) const TAG_BOOTSTRAP: u64 = 4;
pub(crate) const TAG_PARTITION: u64 = 5;
