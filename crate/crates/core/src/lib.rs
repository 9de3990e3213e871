//! Numerical laboratory for vector-valued stochastic integration on
//! finite-dimensional spaces.
//!
//! The state space is `E = lp(N)` (real N-vectors under an lp norm, 1 <= p < inf)
//! and the noise space is `H = R^d` with the Euclidean inner product. The crate
//! provides:
//!
//! * exact left-point Ito sums of operator step processes against d-dimensional
//!   Brownian paths, with sup and terminal moment estimators ([`stochint`]);
//! * gamma-radonifying norm estimation for integral operators represented in a
//!   Haar tensor basis, exact p-th Gaussian moments, domination comparisons and
//!   empirical type-p constants ([`gamma`]);
//! * Besov moduli of continuity, dyadic Besov seminorms and grid Hoelder norms
//!   for grid functions ([`besov`]);
//! * the dyadic machinery shared by all of the above: Haar and Schauder systems,
//!   dyadic grids, conditional expectations and delayed averaging ([`dyadic`]);
//! * reproducible experiment drivers tying the pieces together, including an
//!   explicit Hoelder-continuous integrand family whose stochastic integrals
//!   have unbounded moments as the construction deepens ([`experiments`]).
//!
//! All Monte Carlo sampling is counter-based and splittable: results are
//! bit-identical for a fixed seed regardless of how many worker threads run
//! the reduction.

pub mod besov;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod gamma;
pub mod rng;
pub mod spaces;
pub mod stochint;
pub mod sums;

pub use error::{Error, Result};
