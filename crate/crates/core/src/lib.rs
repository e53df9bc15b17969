//! Singular integrals of the simplified Clairaut equation
//! `x·z_x + y·z_y = z`.
//!
//! Every solution surface handled here is built from the two-parameter
//! family of planes `z = a·x + b·y` by coupling `a` and `b` and taking the
//! envelope of the resulting one-parameter family. The crate is organised
//! bottom-up:
//!
//! - [`exprlang`]: a small expression language with forward-mode
//!   derivatives, used for every user-supplied function.
//! - [`numerics`]: finite differences, Simpson quadrature, a bracketing
//!   root finder and implicit-surface gradients.
//! - [`families`]: the plane family and the four coupling kinds
//!   (function of `a`, implicit relation, parametric curve, inverse map).
//! - [`envelope`]: construction of envelope point clouds and cross-sections.
//! - [`verify`]: PDE residuals, homogeneity, tangency and membership checks.
//! - [`analysis`]: envelope/singular-locus classification, cusps,
//!   invertibility and multivaluedness.
//! - [`catalog`]: named, runnable reproductions of the classical examples.
//! - [`cli`]: the `clairaut` command-line front end and its file formats.

pub mod analysis;
pub mod catalog;
pub mod cli;
pub mod envelope;
mod error;
pub mod exprlang;
pub mod families;
pub mod numerics;
pub mod verify;

pub use error::{Error, Result};

/// A point in the `(x, y)` plane.
pub type Point2 = [f64; 2];
/// A point in `(x, y, z)` space.
pub type Point3 = [f64; 3];
