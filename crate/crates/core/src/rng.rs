//! Counter-based seed derivation.
//!
//! Every random draw in a run is addressed by `(base seed, stream path,
//! index)`. A trial therefore sees the same random numbers no matter which
//! worker executes it or in which order the trials complete.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Address of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSequence {
    key: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSequence {
    pub fn new(seed: u64) -> Self {
        Self {
            key: splitmix64(seed),
        }
    }

    /// Derive a child sequence, e.g. one per sweep point.
    pub fn child(&self, stream: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(stream.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    /// Generator for trial `index` of this sequence.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }

    /// Plain seed for APIs that take a `u64`.
    pub fn seed(&self, index: u64) -> u64 {
        splitmix64(self.key ^ splitmix64(index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = SeedSequence::new(7);
        let a: u64 = s.rng(3).random();
        let b: u64 = s.rng(3).random();
        let c: u64 = s.rng(4).random();
        let d: u64 = s.child(1).rng(3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_ne!(s.seed(0), s.seed(1));
    }
}
