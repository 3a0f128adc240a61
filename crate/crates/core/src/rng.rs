//! Counter-based random streams: every draw is a pure function of a root
//! seed, a stream id and a counter, so evaluation order never matters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce5_e9b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent child seed for `(root, index)`; distinct indices give distinct seeds
/// with overwhelming probability and path seeds never depend on worker count.
#[inline]
pub fn derive_seed(root: u64, index: u64) -> u64 {
    splitmix64(splitmix64(root) ^ splitmix64(index.wrapping_mul(0xd1b5_4a32_d192_ed03)))
}

/// Generator for counter `counter` (a signed step index) on `stream`.
pub fn counter_rng(seed: u64, stream: u64, counter: i64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, counter as u64));
    rng.set_stream(stream);
    rng
}
