//! Universal deep-learning beamforming for the multi-user MISO downlink.

pub mod autodiff;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod trainer;

pub use error::{Error, Result};
