//! Deterministic seed streams.
//!
//! Every random consumer draws from a `ChaCha8Rng` whose seed is derived from
//! a master seed and a path of labels, so two consumers never share a stream
//! and adding a consumer never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix_str(state: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded into the running state.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(state ^ h)
}

/// A position in the seed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream(u64);

impl SeedStream {
    pub fn new(master: u64) -> Self {
        SeedStream(splitmix64(master))
    }

    pub fn child(self, label: &str) -> Self {
        SeedStream(mix_str(self.0, label))
    }

    pub fn index(self, i: u64) -> Self {
        SeedStream(splitmix64(self.0 ^ splitmix64(i.wrapping_add(1))))
    }

    pub fn seed(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> Rng {
        Rng::seed_from_u64(self.0)
    }
}

/// Generator seeded directly from a user-facing seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    SeedStream::new(seed).rng()
}
