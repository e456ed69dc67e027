//! Seeded random streams.
//!
//! Every random draw in the library comes from a ChaCha8 stream keyed by an
//! explicit 64-bit seed and a domain tag, with the stream id selecting an
//! independent substream (shot, run, iteration). ChaCha is counter based, so
//! a substream does not depend on how many draws other substreams made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating the uses of one user seed.
pub mod domain {
    pub const SHOTS: u64 = 0x5348_4f54;
    pub const GIBBS: u64 = 0x4749_4242;
    pub const PAM: u64 = 0x0050_414d;
    pub const MODEL: u64 = 0x4d4f_4445;
    pub const GRADIENT: u64 = 0x4752_4144;
    pub const DATA: u64 = 0x4441_5441;
    pub const RUN: u64 = 0x0052_554e;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed, e.g. one per experiment run.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(domain)) ^ index)
}

/// Independent stream `index` of (`seed`, `domain`).
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain)));
    rng.set_stream(index);
    rng
}
