//! Linear probabilistic population codes and the circuits built from them.
//!
//! A population of Poisson neurons with Gaussian tuning curves encodes a
//! scalar stimulus; the decoded posterior is Gaussian with a precision set
//! by the total population activity (the *gain*). On top of that primitive
//! this crate provides:
//!
//! - [`popcode`] — tuning grids, Poisson encoding, Gaussian decoding.
//! - [`transform`] — a linear coordinate-transform circuit whose output gain
//!   follows the two-input divisive-normalization law.
//! - [`kalman`] — a recurrent population network that integrates a
//!   linear-Gaussian model and per-step observation encodings so that its
//!   decoded mean and variance follow the Kalman recursion.
//! - [`oracles`] — exact scalar Kalman and grid-based Bayes filters used as
//!   independent ground truth.
//! - [`oculomotor`] — a closed-loop saccadic eye-control task: bang-bang
//!   motor processor with a deadzone, delayed gain-gated proprioception,
//!   and the Kalman population as the eye-position estimator.
//!
//! All stochastic operations take an explicit random source, so runs are
//! reproducible for a fixed seed. Values are immutable and `Send + Sync`;
//! parallelism, if any, is across independent seeded runs.

pub mod error;
pub mod kalman;
pub mod oculomotor;
pub mod oracles;
pub mod popcode;
pub mod transform;

pub use error::{Error, Result};
