//! Perturbed eigenvalues and eigenfunctions of a point scatterer on the flat
//! torus `T^d = R^d / 2πZ^d` (`d = 2, 3`), and the small-scale distribution of
//! their L²-mass over balls.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] enumerates lattice points on spheres and the norm set `N_d`,
//!   plus the number-theoretic filter sets used by the equidistribution scans.
//! * [`spectrum`] evaluates the spectral function of the scatterer and solves
//!   for the new eigenvalues, which interlace with `N_d`.
//! * [`greens`] builds truncated Green's functions and their norms.
//! * [`ballmass`] computes exact ball-mass ratios through the Bessel-kernel
//!   Fourier expansion, with an independent quadrature route.
//! * [`equidist`] runs discrepancy scans, density-one filters and lemma audits.
//! * [`cli`] wires everything to the `scatterer` binary.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::manual_is_multiple_of)]

pub mod ballmass;
pub mod cli;
pub mod equidist;
pub mod error;
pub mod greens;
pub mod lattice;
pub mod numeric;
pub mod spectrum;

pub use error::{Error, Result};
pub use lattice::{Dim, LatticePoint};

/// A point on the torus, stored as coordinates in `[0, 2π)` (any real
/// representative is accepted; only differences modulo `2π` matter).
pub type TorusPoint = Vec<f64>;
