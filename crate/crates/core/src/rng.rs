//! Labelled RNG sub-streams derived from one run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const WORLD: &str = "world";
pub const VISION_LEADERS: &str = "vision-leaders";
pub const TRAINING: &str = "intent-training";
pub const NET_INIT: &str = "intent-init";
pub const PLACEMENT: &str = "placement";

/// A ChaCha stream keyed by `(seed, label)`. Adding a new label never shifts
/// the draws of an existing one.
pub fn substream(seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a over the label, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h.rotate_left(17))
}
