//! Counting negative eigenvalues of Schrödinger operators `-Δ + λV` with
//! Neumann conditions on domains whose boundary is only Hölder continuous.
//!
//! The crate builds polygonal subgraph domains (flat, sampled, or a
//! tent-series fractal), evaluates the weighted norms of `V` that control
//! the count, covers the domain by oscillatory boxes, counts eigenvalues by
//! the inertia of P1 finite-element matrices, and certifies the explicit
//! fractal example on which the count outgrows the Weyl term.
//!
//! - [`exponents`]: the exponent family attached to `(d, gamma)`.
//! - [`domain`]: domains and their boundary checks.
//! - [`norms`]: potentials, column quadrature and norms.
//! - [`covering`]: oscillatory domains and the greedy cover.
//! - [`spectral`]: meshing, assembly, inertia counts and constant estimators.
//! - [`weyl`]: semiclassical comparison, bracketing and the CLR-type table.
//! - [`counterexample`]: the fractal example and its test-function certificate.
//! - [`cli`]: the configuration-driven driver behind the binary.

// `!(x > 0.0)` is used throughout to reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod cli;
pub mod counterexample;
pub mod covering;
pub mod domain;
pub mod error;
pub mod exponents;
pub mod fit;
pub mod norms;
pub mod quadrature;
pub mod spectral;
pub mod weyl;

pub use error::{Error, Result};
