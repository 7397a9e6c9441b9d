//! Outage analysis of an OTFS satellite-relay-destination link.
//!
//! Hop 1 is a `K`-antenna satellite with MRT precoding over shadowed-Rician
//! channels; hop 2 is a decode-and-forward relay over Nakagami-m fading.
//! Both hops use zero-forcing equalization in the delay-Doppler domain.
//!
//! * [`special`]: incomplete gamma, Q-function and friends.
//! * [`fading`]: channel laws, inverse moments and samplers.
//! * [`otfs`]: ISFFT/SFFT, the diagonalized DD channel, ZF and MRT.
//! * [`outage`]: closed-form outage probabilities.
//! * [`montecarlo`]: deterministic parallel simulation and fit metrics.
//! * [`config`]: scenario files.
//! * [`oracle`]: independent quadrature and dense-matrix references.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fading;
pub mod montecarlo;
pub mod oracle;
pub mod otfs;
pub mod outage;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
