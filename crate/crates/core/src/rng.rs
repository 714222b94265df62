//! Seed derivation for reproducible parallel Monte Carlo.
//!
//! Every trial owns an RNG determined by `(seed, group, trial)` alone, so
//! results do not depend on how rayon splits the work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for one trial. `group` typically indexes the SNR point.
pub fn trial_rng(seed: u64, group: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, group));
    rng.set_stream(trial);
    rng
}

fn mix(seed: u64, group: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed
        ^ group
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
