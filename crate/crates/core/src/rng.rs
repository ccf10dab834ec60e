//! Counter-based random streams.
//!
//! Every random draw in a run comes from a stream addressed by
//! `(run seed, replicate, domain, round, slot)`. Streams are independent
//! ChaCha8 generators: the first four coordinates are hashed into the key
//! and the slot becomes the ChaCha stream id. Results therefore do not depend
//! on which worker thread handles which slot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator handed to simulators and samplers.
pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Keeps draws of different phases disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Reject = 1,
    Init = 2,
    Calibrate = 3,
    Move = 4,
    Resample = 5,
    Mcmc = 6,
    NaiveInit = 7,
    NaiveMove = 8,
    NaiveResample = 9,
    Reference = 10,
    Pilot = 11,
    Test = 12,
    McmcStart = 13,
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Derives the seed of replicate `r` from the run seed.
pub fn replicate_seed(seed: u64, replicate: u64) -> u64 {
    mix(&[seed, 0x7265_706c, replicate])
}

/// Root of the stream tree for one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child root, used to give independent sub-experiments their own tree.
    pub fn child(&self, tag: u64) -> Self {
        Self::new(mix(&[self.seed, 0x6368_696c, tag]))
    }

    pub fn rng(&self, domain: Domain, round: u64, slot: u64) -> StreamRng {
        let mut key = [0u8; 32];
        let base = [self.seed, domain as u64, round];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let mut parts = base.to_vec();
            parts.push(i as u64);
            chunk.copy_from_slice(&mix(&parts).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(slot);
        rng
    }
}
