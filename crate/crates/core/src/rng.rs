use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic stream for a named purpose. Every pseudorandom schedule in
/// the library goes through here so that identical inputs give identical
/// outputs and reports.
pub(crate) fn stream(tag: &str) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    for (i, b) in tag.bytes().enumerate() {
        seed[i % 32] = seed[i % 32].wrapping_mul(31).wrapping_add(b);
    }
    ChaCha8Rng::from_seed(seed)
}
