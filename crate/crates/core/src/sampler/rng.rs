use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Independent counter-based stream for one replicate of one seed.
pub fn stream(seed: u64, replicate: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}
