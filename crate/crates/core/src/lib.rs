//! Toolkit for measuring syntactic change in dependency-parsed corpora.
//!
//! The crate covers the whole analysis path: CoNLL-U input
//! ([`conllu`]), validated trees ([`tree`]), fifteen per-sentence tree
//! metrics ([`metrics`], [`distances`]), Mann–Kendall trend tests and
//! agreement statistics ([`stats`]), the per-parser trend analysis
//! ([`trend`]), raw-text parser evaluation ([`eval`]), adversarial
//! treebanks ([`attack`]) and corpus filtering and balanced sampling
//! ([`corpus`]). The `depdrift` binary wires these to files ([`cli`]).

pub mod attack;
pub mod cli;
pub mod conllu;
pub mod corpus;
pub mod distances;
pub mod eval;
pub mod metrics;
pub mod stats;
pub mod table;
pub mod tree;
pub mod trend;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable 64-bit FNV-1a hash.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Generator for one unit of work (a sentence, a sampling cell), derived
/// from the global seed and the unit's key so results do not depend on
/// processing order or on which other units are present.
pub fn derived_rng(seed: u64, key: &str) -> ChaCha8Rng {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(key.as_bytes());
    ChaCha8Rng::seed_from_u64(fnv1a(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_rng_depends_on_seed_and_key() {
        let a: u64 = derived_rng(42, "s1").gen();
        assert_eq!(a, derived_rng(42, "s1").gen::<u64>());
        assert_ne!(a, derived_rng(43, "s1").gen::<u64>());
        assert_ne!(a, derived_rng(42, "s2").gen::<u64>());
    }
}
