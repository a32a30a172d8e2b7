//! Capacities, bounds, and finite-blocklength behavior of modulo-sum relay
//! channels: the destination observes Y = X + Z (mod m), a relay sees a
//! noise-correlated observation Y1 and describes it to the destination over
//! a rate-limited link, and the message rate is governed by how well a
//! quantizer U of Y1 reduces the residual noise entropy H(Z|U).
//!
//! The crate provides:
//!
//! - exact finite-alphabet information measures ([`info`]);
//! - the channel model, spec file format, and the relay link capacity via
//!   Blahut–Arimoto ([`channel`]);
//! - the capacity optimizer over quantizers, closed forms for the binary
//!   uniform-noise instance, the cut-set bound, and an exhaustive grid
//!   oracle ([`capacity`]);
//! - exhaustive small-blocklength verification of the converse inequality
//!   ([`converse`]);
//! - a deterministic Monte Carlo simulator of the quantize-and-forward
//!   scheme ([`sim`]);
//! - the batch CLI behind the `modsum` binary ([`cli`]).

// Index-based loops mirror the joint-table sums they implement, and frozen
// reference constants keep all 17 significant digits of the oracle values.
#![allow(clippy::needless_range_loop, clippy::excessive_precision)]

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod converse;
pub mod error;
pub mod info;
pub mod rng;
pub mod sim;

pub use capacity::{
    ahlswede_han_rate, capacity_closed_form_binary_uniform, capacity_grid_oracle, capacity_numeric,
    cutset_bound_binary_uniform, direct_link_capacity, mgl_conditional_entropy_bound,
    no_corruption_capacity, CapacityMethod, CapacityReport, OptimizerOptions, QuantizerDesign,
};
pub use channel::{
    bsc_relay, bsc_relay_with_rate, canonical_spec_json, dmc_capacity, noise_observation_joint,
    parse_spec, relay_link_capacity, RelayChannelSpec, RelayLink,
};
pub use converse::{
    conditional_entropy_exact, enumerate_encoders, verify_converse_bound, ConverseReport,
    RelayEncoderTable,
};
pub use error::{Error, Result};
pub use info::{
    binary_convolve, binary_entropy, binary_entropy_inv, conditional_entropy, entropy, joint_from,
    mutual_information, Axis, Channel, Joint, Pmf,
};
pub use sim::{build_codebooks, simulate, Codebooks, DecoderKind, QfScheme, SimConfig, SimReport};
