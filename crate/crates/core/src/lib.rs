//! Numerical laboratory for the multi-particle multi-scale analysis of weakly
//! interacting Anderson models.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: exact combinatorics of n-particle cubes (projections,
//!   clusters, separability, interactivity, singular-cube counting).
//! * [`model`]: disorder sampling, the interaction potential and assembly of
//!   the finite-difference Hamiltonian on a cube with Dirichlet boundary.
//! * [`spectral`]: eigendecompositions, Green-function block norms, tensor
//!   spectra, Weyl counting and numerical resolvent identities.
//! * [`msa`]: scale schedule, cube verdicts (singular, resonant, CNR,
//!   localized) and Monte Carlo estimators of the multi-scale probabilities.
//! * [`dynamics`]: spectral time evolution, the moment observable and
//!   eigenfunction decay fits.
//!
//! Monte Carlo loops go through [`exec`], which runs on rayon when the
//! `parallel` feature is enabled and sequentially otherwise. Every result
//! depends only on `(master_seed, trial index)`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
mod error;
pub mod exec;
pub mod geometry;
pub mod model;
pub mod msa;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
