//! Seeded random streams.
//!
//! A single 64-bit experiment seed fans out into named, indexed substreams.
//! Each substream is a ChaCha8 generator whose key is derived from the seed
//! and the stream name and whose 64-bit stream id is the index, so streams
//! are independent of one another and of the order in which they are
//! requested. Parallel workers each take their own `(name, index)` stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Root of a tree of named random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    seed: u64,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream `index` of the family `name`.
    pub fn stream(&self, name: &str, index: u64) -> Stream {
        let mut key = [0u8; 32];
        let mut state = self.seed ^ fnv1a(name.as_bytes());
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }

    /// A child factory, for handing a whole sub-tree to another component.
    pub fn child(&self, name: &str, index: u64) -> StreamFactory {
        let mut state = self.seed ^ fnv1a(name.as_bytes()) ^ index.rotate_left(32);
        StreamFactory::new(splitmix64(&mut state))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
