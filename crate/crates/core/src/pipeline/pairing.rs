//! Scan pairing and per-task seed derivation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::Pairing;
use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const PAIRING_STREAM: u64 = 0x7061_6972_696e_6721;

/// SplitMix64 finalizer; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the task that produces slot `k` for base scan `a_index`.
///
/// For a fixed global seed this is injective in `(a_index, k)` as long as both
/// fit in 32 bits: the task id is packed losslessly and every later step is a
/// bijection.
pub fn task_seed(global_seed: u64, a_index: usize, k: u32) -> u64 {
    let task_id = ((a_index as u64) << 32) | k as u64;
    mix64(global_seed.wrapping_add(task_id.wrapping_mul(GOLDEN_GAMMA)))
}

fn pairing_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ PAIRING_STREAM))
}

/// Pairs every scan index `a` with a partner `b != a`.
///
/// `SequentialOffset` gives `b = (a + 1) mod n`. `Shuffled` draws a seeded
/// permutation and repairs each fixed point by swapping it with a uniformly
/// chosen other position; the swap never creates a new fixed point, so the
/// result is a derangement in which every scan donates exactly once.
pub fn pair_scans(n: usize, pairing: Pairing, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::TooFewScans(n));
    }
    let partners: Vec<usize> = match pairing {
        Pairing::SequentialOffset => (0..n).map(|a| (a + 1) % n).collect(),
        Pairing::Shuffled => {
            let mut rng = pairing_rng(seed);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            for i in 0..n {
                if perm[i] == i {
                    let j = rng.gen_range(0..n - 1);
                    let j = if j >= i { j + 1 } else { j };
                    perm.swap(i, j);
                }
            }
            perm
        }
    };
    Ok(partners.into_iter().enumerate().collect())
}

/// Pairs `n_source` base scans with donors from a separate dataset of
/// `n_target` scans. `SequentialOffset` gives `b = a mod n_target`; `Shuffled`
/// walks a seeded permutation of the targets cyclically.
pub fn pair_cross(
    n_source: usize,
    n_target: usize,
    pairing: Pairing,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    if n_target == 0 {
        return Err(Error::Config("target dataset has no scans".into()));
    }
    let pairs = match pairing {
        Pairing::SequentialOffset => (0..n_source).map(|a| (a, a % n_target)).collect(),
        Pairing::Shuffled => {
            let mut perm: Vec<usize> = (0..n_target).collect();
            perm.shuffle(&mut pairing_rng(seed));
            (0..n_source).map(|a| (a, perm[a % n_target])).collect()
        }
    };
    Ok(pairs)
}
