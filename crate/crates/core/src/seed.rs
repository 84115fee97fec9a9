//! Counter-based RNG stream splitting.
//!
//! Every random stream is identified by `(master seed, purpose tag, index)`.
//! The stream seed is
//!
//! ```text
//! h0 = splitmix64(master)
//! h1 = splitmix64(h0 ^ fnv1a64(tag))
//! seed = splitmix64(h1 ^ splitmix64(index))
//! ```
//!
//! and the stream itself is ChaCha8 seeded from that 64-bit value. Only the
//! derivation above needs to be matched to reproduce task seeds in another
//! language; the per-task `seed` written to dataset records is `seed`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used throughout the crate.
pub type SimRng = ChaCha8Rng;

pub mod tag {
    pub const TASK: &str = "task";
    pub const COT: &str = "cot";
    pub const VQM_TASK: &str = "vqm-task";
    pub const VQM_POLICY: &str = "vqm-policy";
    pub const VQM_GUESS: &str = "vqm-guess";
    pub const CORPUS: &str = "corpus";
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn stream_seed(master: u64, purpose: &str, index: u64) -> u64 {
    let h0 = splitmix64(master);
    let h1 = splitmix64(h0 ^ fnv1a64(purpose.as_bytes()));
    splitmix64(h1 ^ splitmix64(index))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, purpose: &str, index: u64) -> SimRng {
    rng_from_seed(stream_seed(master, purpose, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn splitmix_reference_value() {
        // First output of the reference SplitMix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn streams_are_distinct_and_stable() {
        let a = stream_seed(7, tag::TASK, 0);
        assert_eq!(a, stream_seed(7, tag::TASK, 0));
        assert_ne!(a, stream_seed(7, tag::TASK, 1));
        assert_ne!(a, stream_seed(7, tag::COT, 0));
        assert_ne!(a, stream_seed(8, tag::TASK, 0));
        let x: u64 = stream_rng(7, tag::TASK, 3).random();
        let y: u64 = stream_rng(7, tag::TASK, 3).random();
        assert_eq!(x, y);
    }
}
