use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for path `index`: the run seed picks the key, the
/// path index picks the stream, so a path's draws never depend on which
/// worker runs it.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
