//! Seeded, splittable random streams.
//!
//! Every stochastic procedure takes an [`RngStream`]. A stream is identified by
//! `(seed, stream_id)` and backed by ChaCha8, whose 64-bit stream parameter
//! gives independent sequences for distinct ids under one key. Parallel work
//! never shares a stream: replicate `r` asks for `split(r)` instead.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream `child` of this stream.
    ///
    /// Depends only on `(seed, stream_id, child)`, never on how many draws
    /// have already been taken from `self`.
    pub fn split(&self, child: u64) -> RngStream {
        RngStream::new(mix(self.seed, self.stream_id), child)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(seed: u64, stream_id: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ stream_id.rotate_left(32) ^ 0x5851_f42d_4c95_7f2d)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
