//! Per-replicate random streams.
//!
//! Every replicate draws from its own ChaCha8 stream, keyed by the master
//! seed, a domain tag (so that forward and dual runs of one experiment are
//! independent) and the replicate index. Results therefore do not depend on
//! how replicates are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Domain tags used by the simulators and harnesses.
pub mod domain {
    pub const FORWARD: u64 = 0x464f_5257;
    pub const DUAL: u64 = 0x4455_414c;
    pub const GRAFT: u64 = 0x4752_4146;
    pub const SAMPLE: u64 = 0x5341_4d50;
    pub const SELECTIVE: u64 = 0x5345_4c45;
    pub const POISSON: u64 = 0x504f_4953;
    pub const TEST: u64 = 0x5445_5354;
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream number `index` of `(master, domain)`.
pub fn stream(master: u64, domain: u64, index: u64) -> SimRng {
    let mut seed = [0u8; 32];
    let mut state = master ^ splitmix64(domain);
    for chunk in seed.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(index);
    rng
}
