//! Named random streams derived from one master seed.
//!
//! Each consumer draws from its own ChaCha stream, so enabling clutter or a
//! detection probability below one never shifts the spawn, noise or policy
//! sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Spawn = 1,
    MeasurementNoise = 2,
    Policy = 3,
    Detection = 4,
    Clutter = 5,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
