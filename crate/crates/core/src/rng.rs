use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for trial `stream` of an experiment seeded with
/// `seed`. ChaCha streams never overlap, so trials can run in any order or in
/// parallel and still reproduce bit-for-bit.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
