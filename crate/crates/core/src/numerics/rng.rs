use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Random stream handed out to every stochastic stage.
pub type Stream = ChaCha8Rng;

/// Deterministic stream for `(seed, label)`. Different labels hash to
/// unrelated ChaCha keys, so stages never share draws.
pub fn seeded_stream(seed: u64, label: &str) -> Stream {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(label.as_bytes())
        .finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

/// Child seed for a labeled sub-stage, for APIs that take a plain `u64`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    use rand::RngCore;
    seeded_stream(seed, label).next_u64()
}
