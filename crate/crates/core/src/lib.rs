//! Discrete quasi-norms for Besov and Triebel-Lizorkin spaces of low smoothness.
//!
//! Functions live on dyadic grids ([`grid`]). Each characterization (Haar
//! sequences, Faber coefficients, differences, oscillations) turns a sampled
//! function into a number, and the lab modules compare those numbers before and
//! after truncation `f -> |f|` or composition `f -> g(f)`.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod composition_lab;
pub mod differences;
pub mod error;
pub mod faber;
pub mod fubini;
pub mod grid;
pub mod haar;
pub mod norms;
pub mod oscillation;
pub mod reduce;
pub mod report;
pub mod spaces;
pub mod truncation_lab;

pub use error::{Error, Result};
pub use grid::{GridBox, GridFunction};
pub use spaces::{Family, SpaceParams};
