//! Named, seed-derived random streams.
//!
//! Every consumer of randomness derives its own ChaCha stream from the root
//! seed and a stream name (`"triplets"`, `"init"`, `"training"`, ...), so
//! the draws of one component never shift those of another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const SPLIT: &str = "ingest-split";
pub const TRIPLETS: &str = "triplets";
pub const INIT: &str = "init";
pub const TRAINING: &str = "training";
pub const SMOTE: &str = "smote";
pub const SYNTHETIC: &str = "synthetic";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream for `name` under the root `seed`.
pub fn stream(seed: u64, name: &str) -> StreamRng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ fnv1a(name.as_bytes())))
}

/// Independent stream for item `index` of a named stream, e.g. one per anchor.
pub fn substream(seed: u64, name: &str, index: u64) -> StreamRng {
    let base = splitmix64(seed ^ fnv1a(name.as_bytes()));
    ChaCha8Rng::seed_from_u64(splitmix64(base ^ splitmix64(index.wrapping_add(1))))
}

/// Standard normal draw (Box-Muller).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - gen() lies in (0, 1], keeping ln finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}
