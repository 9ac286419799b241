//! Brownian motion with positive drift, stopped at the last passage time of a
//! positive level.
//!
//! For a standard Brownian motion `B` and drift `lambda > 0`, the drifted
//! motion `B_t + lambda*t` visits any level `z > 0` for a last time
//! `sigma = sup{t : B_t + lambda*t = z}`, which is finite almost surely but is
//! not a stopping time. Freezing the motion at `sigma` produces a process
//! `xi` that is Markov but loses the strong Markov property exactly at `z`,
//! and whose absorption time becomes observable only through the pair
//! `(indicator of {t < sigma}, xi_t)`.
//!
//! The crate provides, for this stopped process:
//!
//! * closed-form densities and distribution functions ([`analytic`]),
//! * the transition kernel and semigroup of the augmented state, conditional
//!   laws of `sigma`, and the pointwise generator ([`kernels`]),
//! * exact and approximate path samplers with reproducible RNG streams
//!   ([`sampler`]),
//! * statistical estimators and hypothesis-test style verdicts
//!   ([`estimators`]),
//! * an explicit finite-difference solver for the associated backward
//!   equation ([`pde`]).
//!
//! Everything downstream of [`analytic`] is deterministic given a seed; the
//! samplers draw from counter-based RNG streams so batches are reproducible
//! path-by-path regardless of scheduling.

pub mod analytic;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod pde;
pub mod quad;
pub mod report;
pub mod sampler;
pub mod special;

pub use analytic::ModelParams;
pub use error::{Error, Result};
pub use report::{TestReport, Verdict};
