//! Interference, SINR and outage analysis for UAV-mounted mmWave fronthaul
//! downlinks with vibration-induced beam misalignment.

#![allow(clippy::excessive_precision)]

pub mod analytic;
pub mod antenna;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod mcsim;
pub mod quadrature;
pub mod rng;
pub mod special_math;
pub mod table;

pub use error::{Error, Result};
