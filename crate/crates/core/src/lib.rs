//! Link-level simulation of full-duplex amplify-and-forward relay OFDM.
//!
//! The relay's residual self-interference turns the end-to-end channel into
//! a first-order IIR system. This crate implements a one-sample guard
//! interval precoder that gives the destination an ordinary cyclic-prefix
//! structure over that channel, the matching one- and two-step
//! frequency-domain equalizers, closed-form noise budgets with a relay gain
//! optimizer, and Monte-Carlo drivers that check the analysis.

pub mod channel;
pub mod error;
pub mod fdrelay;
pub mod harness;
pub mod linkbudget;
pub mod numerics;
pub mod receiver;
pub mod txchain;

pub use error::{Error, Result};
