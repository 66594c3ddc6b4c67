//! Counter-based random streams.
//!
//! Every stochastic unit of work (a simulated site, an MCMC chain, a study
//! replicate) draws from its own ChaCha8 stream, addressed by a 64-bit key
//! and a 64-bit stream id. Streams never overlap, so results do not depend on
//! which thread runs which unit or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The concrete generator used everywhere in the crate.
pub type StreamRng = ChaCha8Rng;

/// Purpose tag, stored in the top byte of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Site = 1,
    Validation = 2,
    Chain = 3,
    Subset = 4,
    Covariate = 5,
    Prior = 6,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of indices, e.g.
/// `(scenario, replicate)`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |acc, &part| mix64(acc ^ mix64(part)))
}

/// Opens stream `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> StreamRng {
    debug_assert!(index < (1 << 56), "stream index overflows the domain tag");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | index);
    rng
}
