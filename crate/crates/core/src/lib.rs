//! Sandwiched Renyi entropies and mutual informations of finite-dimensional quantum
//! states, and randomized numerical verification of the relations between them.
//!
//! - [`linalg`]: dense complex matrices, Hermitian spectral calculus, Schatten norms,
//!   tensor products and partial traces.
//! - [`states`]: density matrices, seeded random state families, purification,
//!   operator-vector correspondence and measurement channels.
//! - [`orders`]: Renyi orders, their derived exponents and the classification of order
//!   triples and quadruples.
//! - [`entropies`], [`mutual`], [`normforms`]: the entropic quantities, their optimized
//!   variants and their Schatten-norm expressions.
//! - [`optimize`]: optimization over density matrices and an exhaustive qubit grid.
//! - [`relations`]: verifiers that turn each inequality into a signed margin record.
//! - [`sweep`], [`report`]: configurable randomized sweeps and their CSV/JSON reports.
//! - [`selftest`]: the fixed acceptance battery.

// Comparisons are written as `!(x >= y)` where NaN must be rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropies;
pub mod error;
pub mod linalg;
pub mod mutual;
pub mod normforms;
pub mod optimize;
pub mod orders;
pub mod relations;
pub mod report;
pub mod selftest;
pub mod states;
pub mod sweep;
