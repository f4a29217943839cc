//! Optimal control of linear systems driven by acausal (wide-band and delayed) noise.

pub mod error;
pub mod experiments;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod noise;
pub mod problem;
pub mod riccati;
pub mod sim;

pub use error::{Error, Result};
