//! Seed derivation.
//!
//! Every stochastic routine takes an explicit generator. Experiments start
//! from one master seed; each replication gets its own ChaCha stream, and
//! sub-tasks (retries, oracle rollouts) fork child generators from their
//! parent so the whole run is replayable bit for bit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for replication `replication` of an experiment seeded by `master`.
pub fn replication_rng(master: u64, replication: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(master);
    rng.set_stream(replication);
    rng
}

/// Independent child generator drawn from `parent`.
pub fn fork<R: RngCore + ?Sized>(parent: &mut R) -> SimRng {
    let mut seed = <SimRng as SeedableRng>::Seed::default();
    parent.fill_bytes(&mut seed);
    SimRng::from_seed(seed)
}
