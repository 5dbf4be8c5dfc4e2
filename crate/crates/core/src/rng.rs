//! Reproducible random streams.
//!
//! A stream is a ChaCha8 keystream keyed by `seed` with the 64-bit stream
//! selector set to `stream_id`; the generator is counter based, so streams
//! with distinct ids never overlap and each can be reproduced in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// The stream for sub-task `index` of this stream.
    pub fn substream(&self, index: u32) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: self.stream_id ^ ((index as u64) << 48),
        }
    }
}
