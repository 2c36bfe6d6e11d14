//! Per-replication random streams.
//!
//! Every replication owns two ChaCha streams cut from the master seed by
//! stream id, so results never depend on which thread ran a replication or
//! in what order. Demand and policy randomness use separate streams: the
//! demand path of a replication is the same whatever the policy consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn demand_stream(master_seed: u64, replication: u64) -> ChaCha8Rng {
    stream(master_seed, 2 * replication)
}

pub fn policy_stream(master_seed: u64, replication: u64) -> ChaCha8Rng {
    stream(master_seed, 2 * replication + 1)
}

fn stream(master_seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}
