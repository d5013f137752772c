//! Counter-based random substreams.
//!
//! Every world is drawn from its own ChaCha8 stream, so any replicate can be
//! regenerated in isolation and results never depend on how replicates are
//! scheduled across workers. The mapping is fixed:
//!
//! * key: `ChaCha8Rng::seed_from_u64(seed)` (the `rand_core` PCG32 seed expansion)
//! * stream: `(replicate << 2) | stratum`, with stratum `0` when the state is
//!   sampled from the prior, `1` when forced to `H`, `2` when forced to `L`
//! * within a stream, 64-bit slot `0` is the state uniform and agent `i` owns
//!   slots `1 + 2i` (type) and `2 + 2i` (first arrival); slot `j` starts at
//!   32-bit word position `2j`
//! * a 64-bit output `u` maps to the open unit interval as `((u >> 12) + 0.5) * 2^-52`

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::model::State;

/// How the state of a world is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stratum {
    Sampled,
    Forced(State),
}

impl Stratum {
    fn tag(self) -> u64 {
        match self {
            Stratum::Sampled => 0,
            Stratum::Forced(State::H) => 1,
            Stratum::Forced(State::L) => 2,
        }
    }
}

/// Identifies one world's substream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SubstreamKey {
    pub seed: u64,
    pub replicate: u64,
    pub stratum: Stratum,
}

impl SubstreamKey {
    pub fn new(seed: u64, replicate: u64, stratum: Stratum) -> Self {
        assert!(replicate < 1 << 62, "replicate index {replicate} does not fit the stream layout");
        SubstreamKey { seed, replicate, stratum }
    }

    pub fn stream_id(&self) -> u64 {
        (self.replicate << 2) | self.stratum.tag()
    }
}

const STATE_SLOT: u64 = 0;

fn type_slot(agent: u64) -> u64 {
    1 + 2 * agent
}

fn arrival_slot(agent: u64) -> u64 {
    2 + 2 * agent
}

/// Maps 64 random bits to `(0, 1)`, never hitting either endpoint.
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Sequential reader over one world's substream.
pub struct WorldStream {
    rng: ChaCha8Rng,
}

impl WorldStream {
    /// Positioned at slot 0 (the state uniform).
    pub fn new(key: SubstreamKey) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(key.seed);
        rng.set_stream(key.stream_id());
        rng.set_word_pos(0);
        WorldStream { rng }
    }

    pub fn state_uniform(&mut self) -> f64 {
        open_unit(self.rng.next_u64())
    }

    /// Next agent's `(type uniform, arrival uniform)`. Call after [`state_uniform`](Self::state_uniform).
    pub fn agent_uniforms(&mut self) -> (f64, f64) {
        let ty = open_unit(self.rng.next_u64());
        let arrival = open_unit(self.rng.next_u64());
        (ty, arrival)
    }
}

/// Random access to a single slot, for checking the layout.
pub fn slot_uniform(key: SubstreamKey, slot: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(key.seed);
    rng.set_stream(key.stream_id());
    rng.set_word_pos(2 * slot as u128);
    open_unit(rng.next_u64())
}

/// `(type, arrival)` uniforms of one agent, read directly at its slots.
pub fn agent_uniforms_at(key: SubstreamKey, agent: u64) -> (f64, f64) {
    (slot_uniform(key, type_slot(agent)), slot_uniform(key, arrival_slot(agent)))
}

pub fn state_uniform_at(key: SubstreamKey) -> f64 {
    slot_uniform(key, STATE_SLOT)
}
