//! Numerical core for large deviations of fractional stochastic
//! reaction-diffusion equations on a periodic box.
//!
//! The crate is `no_std` (with `alloc`). It covers
//!
//! - spectral representation of fields and the fractional Laplacian
//!   ([`spectral`]),
//! - the polynomial drift and its structural conditions ([`drift`]),
//! - the mode-truncated multiplicative noise operator ([`noise`]),
//! - deterministic controlled dynamics ([`skeleton`]) and the stochastic
//!   equation with its Girsanov-shifted variant ([`spde`]),
//! - the minimum-action rate function via adjoint gradients ([`rate`]),
//! - naive and importance-sampled rare-event estimators ([`mc`]),
//! - empirical checks of tail decay, weak-to-strong continuity and
//!   moment bounds ([`lab`]).
//!
//! Ensembles are driven through the [`exec::Executor`] trait so that a
//! parallel backend can be supplied by a `std` crate while every reduction
//! happens in fixed index order.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod drift;
pub mod error;
pub mod exec;
mod fft;
pub mod lab;
pub mod mc;
pub mod noise;
pub mod rate;
pub mod rng;
pub mod skeleton;
pub mod spde;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use skeleton::{Control, Model, Taming, TimeGrid, Trajectory};
pub use spectral::{Field, Grid, SpectralField};
