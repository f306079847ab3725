//! Named random substreams derived from a single experiment seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_AGENTS: u64 = 1;
pub const STREAM_OD_PAIRS: u64 = 2;
pub const STREAM_SAMPLING: u64 = 3;

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
