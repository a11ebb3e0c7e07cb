//! Seedable, stream-splittable random source.
//!
//! All randomness in the simulator flows from a [`SimRng`]. The generator is
//! ChaCha8 keyed by the user seed; independent streams share the key and
//! differ by stream id, so parallel Monte Carlo instances never overlap.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stream used for operations on the die.
pub const OPERATION_STREAM: u64 = 0;
/// Stream used to sample fresh devices when a die is built.
pub const DEVICE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

/// Serializable position of a [`SimRng`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub key: [u8; 32],
    pub stream: u64,
    /// Word position, kept as a decimal string (u128 is not portable in JSON).
    pub word_pos: String,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Generator on stream `id` of the same key, positioned at its start.
    pub fn split(&self, id: u64) -> Self {
        let mut inner = ChaCha8Rng::from_seed(self.inner.get_seed());
        inner.set_stream(id);
        Self { inner }
    }

    pub fn state(&self) -> RngState {
        RngState {
            key: self.inner.get_seed(),
            stream: self.inner.get_stream(),
            word_pos: self.inner.get_word_pos().to_string(),
        }
    }

    pub fn from_state(state: &RngState) -> Result<Self> {
        let pos: u128 = state
            .word_pos
            .parse()
            .map_err(|_| Error::Parse(format!("bad rng word position {:?}", state.word_pos)))?;
        let mut inner = ChaCha8Rng::from_seed(state.key);
        inner.set_stream(state.stream);
        inner.set_word_pos(pos);
        Ok(Self { inner })
    }
}

impl RngCore for SimRng {
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
