//! Discrete spectra of Robin Laplacians on infinite planar sectors and of
//! δ-interactions supported on star graphs.
//!
//! The sector `U_α = {(r, θ): |θ| < α}` carries the Robin Laplacian
//! `T^γ_α` (`∂u/∂ν = γu` on both edges). Its essential spectrum is
//! `[-γ², ∞)`; for `α < π/2` the bottom of the spectrum is the eigenvalue
//! `-γ²/sin²α`, and the discrete spectrum is finite. This crate computes
//! that discrete spectrum numerically, with certified enclosures, and
//! checks its qualitative structure (monotonicity in α, small-angle
//! asymptotics, counting, exponential localization).
//!
//! Layout:
//!
//! - [`interval`]: one-dimensional Robin problems on intervals, the root
//!   `m(γ)` of `m tanh m = γ`, and the transverse-energy diagnostic.
//! - [`model`]: the radial operator `-d²/dr² - 1/(4r²) - 1/(ar)`, its exact
//!   Laguerre eigenpairs and a finite-element discretization.
//! - [`grid`], [`assembly`]: polar tensor grids and the conforming bilinear
//!   finite-element pencils for sectors and star graphs.
//! - [`eigensolver`]: LOBPCG, a dense reference solver, inertia counting and
//!   quasimode certificates.
//! - [`analysis`]: α-scans, expansion fits, counting and decay-rate studies.
//! - [`star`]: δ-interactions on star graphs and the sector counting bound.
//! - [`cli`]: configuration, reports and the command-line driver.
//!
//! Runnable examples live in `examples/`; `cargo run --example <name>`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops read better than zipped iterators in the banded kernels.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod eigensolver;
pub mod error;
pub mod grid;
pub mod interval;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod sparse;
pub mod star;

pub use error::{Error, Result};
