//! Rigid-ball Newtonian self-gravity, Schrödinger–Newton dynamics and
//! gravity-related collapse.
//!
//! The crate is organised bottom-up: [`units`] and [`kernel`] define the physical
//! input, [`grid`] holds states and spectral tools, [`deterministic`] and
//! [`stochastic`] evolve them, and [`scenarios`] strings everything into
//! reproducible experiments driven by a flat JSON configuration.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decoherence;
pub mod deterministic;
pub mod grid;
pub mod kernel;
pub mod scenarios;
pub mod stochastic;
pub mod units;
