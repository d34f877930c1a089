//! Band and dense factorizations behind the eigensolver.

pub mod band;
pub mod dense;

pub use band::{band_inertia, BandCholesky, Inertia, SymBand};
pub use dense::{bunch_kaufman_inertia, generalized_eigen, symmetric_eigen_sorted};
