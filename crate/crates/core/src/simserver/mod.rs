//! Deterministic simulated Lean file-worker running in virtual time.
//!
//! A [`SimServer`] answers the snapshot methods from a per-problem
//! [`TheoremProfile`] instead of elaborating anything. Replies are events on
//! a [`VirtualClock`]; [`SimPipe`] and [`serve_tcp`] put it behind a byte
//! stream.

mod clock;
mod ledger;
mod pipe;
mod profile;
mod server;
mod tcp;

pub use clock::VirtualClock;
pub use ledger::{fallback_peak_gb, MemoryLedger, FALLBACK_WORKER_GB};
pub use pipe::SimPipe;
pub use profile::{HoleSpec, ProfileError, TacticOutcome, TheoremProfile};
pub use server::{
    import_header, theorem_id_from_uri, CpuJitter, MetavarContext, OpenAck, ServerLevel,
    SharedEnvironment, SimConfig, SimServer, SnapshotRecord, Timed, TraceEntry, TraceKind,
};
pub use tcp::{serve_connection, serve_tcp, DEFAULT_QUIET};

#[cfg(test)]
pub(crate) use profile::fixtures;
