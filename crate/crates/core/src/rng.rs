//! Reproducible ensemble randomness.
//!
//! Every replication owns a ChaCha stream addressed by (seed, replication,
//! lane). ChaCha8 exposes 2^64 independent streams per seed; we pack the
//! replication index into the high 48 bits and a lane id into the low 16, so
//! a replication can consume several independent sources (e.g. two fBm paths
//! plus the switching noise) without coordination. Work scheduled in any
//! order, on any number of workers, therefore reproduces bit-identical draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const LANE_BITS: u32 = 16;
pub const MAX_LANE: u64 = (1 << LANE_BITS) - 1;
pub const MAX_REPLICATION: u64 = (1 << (64 - LANE_BITS)) - 1;

/// Lane 0: the model's main draw stream.
pub const LANE_MAIN: u64 = 0;
/// Mixture models: the base-branch fBm, the alternate-branch fBm, the switches.
pub const LANE_FBM_BASE: u64 = 1;
pub const LANE_FBM_ALT: u64 = 2;
pub const LANE_SWITCH: u64 = 3;
/// supOU: mixing draws live on this lane, component k on LANE_COMPONENT0 + k.
pub const LANE_MIXING: u64 = 4;
pub const LANE_COMPONENT0: u64 = 16;

/// RNG for one replication's main lane.
pub fn spawn_replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    spawn_lane_rng(seed, replication, LANE_MAIN)
}

/// RNG for one (replication, lane) pair.
pub fn spawn_lane_rng(seed: u64, replication: u64, lane: u64) -> ChaCha8Rng {
    assert!(replication <= MAX_REPLICATION, "replication index {replication} exceeds 2^48 - 1");
    assert!(lane <= MAX_LANE, "lane {lane} exceeds 2^16 - 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replication << LANE_BITS) | lane);
    rng
}
