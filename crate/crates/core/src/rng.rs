//! Seeded random streams.
//!
//! Every Monte Carlo replication draws from its own ChaCha stream selected by
//! `(seed, index)`, so results do not depend on how replications are
//! scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for replication `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
