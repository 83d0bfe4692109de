//! Named random streams.
//!
//! Every subsystem draws from its own ChaCha stream derived from the run seed,
//! so toggling one feature (attacks, say) never shifts another subsystem's
//! draws and paired-seed experiments stay paired.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology,
    Data,
    Mobility,
    Training,
    Attacks,
    Selection,
    ModelInit,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Topology => 0x746f_706f,
            Stream::Data => 0x6461_7461,
            Stream::Mobility => 0x6d6f_6269,
            Stream::Training => 0x7472_6169,
            Stream::Attacks => 0x6174_7461,
            Stream::Selection => 0x7365_6c65,
            Stream::ModelInit => 0x696e_6974,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5375_7346_4c00_0001, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Top-level stream for a subsystem.
pub fn stream(seed: u64, which: Stream) -> SimRng {
    SimRng::seed_from_u64(mix(&[seed, which.tag()]))
}

/// Sub-stream keyed by extra coordinates, e.g. (client id, round).
pub fn substream(seed: u64, which: Stream, a: u64, b: u64) -> SimRng {
    SimRng::seed_from_u64(mix(&[seed, which.tag(), a, b]))
}
