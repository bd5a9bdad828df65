//! Muon optimizer and its convergence-bound engine.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs (plus an explicit seeded RNG where sampling is
//! involved), so the same numbers come out on every platform and thread
//! count. File formats, the CLI and parallel replica execution live in the
//! `muonkit-cli` companion crate.
//!
//! Module map:
//!
//! - [`matrix`] / [`svd`]: dense row-major `f64` matrices, Frobenius
//!   geometry, one-sided Jacobi SVD, nuclear and spectral norms.
//! - [`orthogonalize`]: exact polar factor and cubic Newton–Schulz.
//! - [`schedules`]: learning-rate and batch-size schedules.
//! - [`problems`]: finite-sum synthetic objectives with certified
//!   smoothness/variance constants and the minibatch gradient oracle.
//! - [`muon`]: the optimizer step and full runs with per-step traces.
//! - [`bounds`]: exact theorem sums, closed-form corollary bounds, slopes.
//! - [`sweep`]: rate sweeps over the step budget.
//! - [`verify`]: the property checks shared by the CLI and the tests.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod error;
pub(crate) mod math;
pub mod matrix;
pub mod muon;
pub mod orthogonalize;
pub mod problems;
pub mod schedules;
pub mod svd;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use matrix::Matrix;
