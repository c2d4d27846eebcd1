//! Gradient diversity of fully-connected networks.
//!
//! * [`numerics`]: matrices, seeded Gaussian streams, Monte Carlo estimation.
//! * [`network`]: linear and nonlinear fully-connected nets with backprop.
//! * [`diversity`]: gradient diversity and the batch-size bound it implies.
//! * [`theory`]: closed-form expectations for Gaussian linear networks.
//! * [`montecarlo`]: sampling-based checks of those closed forms.
//! * [`experiments`]: fixed-budget width/depth grids, SGD, batch sweeps.

pub mod diversity;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod montecarlo;
pub mod network;
pub mod numerics;
pub mod theory;

pub use error::{Error, Result};
pub use exec::Execution;
pub use numerics::SeedKey;
