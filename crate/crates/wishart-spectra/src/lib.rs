//! Eigenvalue densities of doubly correlated Wishart matrices.
//!
//! A data matrix whose rows carry one correlation structure (eigenvalues Λ of
//! the p×p matrix C) and whose columns carry another (eigenvalues Γ of the
//! n×n matrix D) defines a doubly correlated Wishart ensemble. This crate
//! computes the ensemble-averaged eigenvalue density of WW† by four
//! independent routes and cross-validates them against a seeded Monte Carlo
//! sampler:
//!
//! * [`complex_exact`] — the exact closed form for the unitary class (β = 2),
//!   plus coalescing-eigenvalue limits;
//! * [`character`] — the character-expansion determinant formula from the
//!   earlier literature (β = 2), including its documented erratum and its
//!   large-x numerical instability;
//! * [`real_quad`] — the orthogonal class (β = 1) via fourfold oscillatory
//!   integrals, with a reduced two-dimensional non-oscillatory form for
//!   twofold-degenerate spectra;
//! * [`asymptotics`] — large-n and large-(n,p) limits down to the
//!   Marchenko-Pastur law;
//! * [`montecarlo`] — the empirical oracle: reproducible sampling, histogram
//!   densities and curve-vs-curve comparison metrics.
//!
//! Supporting numerics (stable elementary symmetric functions, self-contained
//! special functions, double-double arithmetic, quadrature, a counter-based
//! RNG and a small dense eigensolver) are all in-repo; the only external
//! dependencies are serialization plumbing.

pub mod asymptotics;
pub mod character;
pub mod complex_exact;
pub mod dd;
pub mod error;
pub mod io;
pub mod linalg;
pub mod logdomain;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod real_quad;
pub mod rng;
pub mod specfun;
pub mod symfunc;
pub mod threads;

pub use error::{Error, Result};
pub use model::{Beta, DensityCurve, DensityMethod, EnsembleSpec, ValidatedSpec};
