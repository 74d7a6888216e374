//! Counter-based random substreams.
//!
//! Every replica draws from `stream(master, r)`: a ChaCha8 generator keyed by the
//! master seed with the replica index as stream id, so results do not depend on
//! how replicas are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(master: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id);
    rng
}
