//! Exact delivery-time analysis for a two-transmitter, two-user downlink
//! in the deterministic binary-stack model. A macro base station (eNB)
//! reaches both users, a small helper station (HeNB) with a per-file
//! cache and a finite-capacity fronthaul reaches only its own user.
//!
//! The crate computes the optimal delivery time per bit in exact rational
//! arithmetic three independent ways (closed forms, converse programs,
//! achievability LPs), synthesizes bit-level delivery schemes from the LP
//! solutions, and replays them over the channel to confirm the analysis.

pub mod channel;
pub mod converse;
pub mod lp;
pub mod rat;
pub mod ratelp;
pub mod regime;
pub mod scheme;
pub mod sim;
