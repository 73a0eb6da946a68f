//! Hardy-Littlewood averaging and maximal operators over convex symmetric
//! bodies in `R^d` and `Z^d`, together with numerical verifiers for the
//! finite, pointwise ingredients of their dimension-free theory.
//!
//! The crate is organised by subsystem:
//!
//! * [`bodies`]: gauges, exact and rejection samplers, volume and
//!   covariance estimation, isotropic normalization.
//! * [`multipliers`]: section functions, Fourier multipliers of
//!   continuous and lattice averages, and bound checkers.
//! * [`gridops`]: grid-discretized averages, maximal functions, the
//!   Poisson semigroup and the dyadic-block inequalities.
//! * [`lattice`]: exact lattice-point enumeration, discrete averages and
//!   the lattice counting lemmas.
//! * [`search`], [`suite`], [`plot`]: norm lower-bound search, the check
//!   registry with its runner, and plot-series extraction.
//!
//! Every randomized routine takes an explicit seed and is bitwise
//! reproducible for a fixed seed, independent of the rayon thread count.

pub mod bodies;
pub mod error;
pub mod gridops;
pub mod lattice;
pub mod multipliers;
pub mod plot;
pub mod report;
pub mod rng;
pub mod search;
pub mod special;
pub mod suite;

pub use error::{Error, Result};
pub use report::{ExperimentReport, Margin, Measurement};
