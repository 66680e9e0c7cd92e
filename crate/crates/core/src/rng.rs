//! Portable random stream used wherever outputs must be reproducible across
//! implementations.
//!
//! The stream is ChaCha8 seeded through `seed_from_u64`, and only raw 64-bit
//! words are consumed:
//!
//! * `unit()` is `(word >> 11) * 2^-53`, uniform on `[0, 1)`;
//! * `sign()` is `+1` when the top bit of the word is clear, `-1` otherwise.
//!
//! Every draw consumes exactly one word, so the draw sequence is fully
//! described by the order in which callers ask for values.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn word(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn unit(&mut self) -> f64 {
        (self.word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn sign(&mut self) -> i8 {
        if self.word() >> 63 == 0 {
            1
        } else {
            -1
        }
    }
}

/// SplitMix64 finaliser, used to derive independent child seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
