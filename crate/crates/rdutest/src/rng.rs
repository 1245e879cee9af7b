//! Deterministic stream derivation: every randomized stage draws from a
//! ChaCha stream addressed by (purpose, index) under one master seed, so
//! results never depend on thread scheduling or execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_ORDER_SEARCH: u64 = 1;
pub const STREAM_BOOTSTRAP: u64 = 2;
pub const STREAM_SIMULATE: u64 = 3;

/// Independent generator for stream (purpose, index) under `master`.
pub fn stream_rng(master: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    assert!(index < (1 << 32), "stream index too large");
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((purpose << 32) | index);
    rng
}
