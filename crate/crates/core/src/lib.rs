//! Wideband MIMO channel simulator for links assisted by an aerial and a
//! terrestrial reflecting surface.
//!
//! Each link between a fixed base station and a moving receiver carries
//! three kinds of taps:
//!
//! * a specular path reflected by the aerial surface (AIRS),
//! * a specular path reflected by the terrestrial surface (IRS),
//! * one single-bounce tap per scattering cluster around the receiver.
//!
//! [`channel::ChannelModel`] evaluates the taps of one ensemble member,
//! [`stats`] estimates correlation functions and capacity over an
//! ensemble, and [`experiment`] runs the reference sweeps and writes CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fading;
pub mod geometry;
pub mod phase;
pub mod stats;

pub use channel::{ChannelModel, ScenarioConfig};
pub use error::{Error, Result};
pub use phase::{PhaseDesign, PhaseMethod};
