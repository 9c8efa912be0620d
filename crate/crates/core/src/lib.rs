//! Exact computational algebra over finite fields of odd characteristic:
//! middle convolution and scalar-multiplication functors on tuples of
//! invertible matrices, braid-group actions, rigidity diagnostics,
//! invariant bilinear forms with spinor norms and Witt extensions, and
//! small-group machinery for generating-tuple classes.
//!
//! The `pipeline` module replays the explicit orthogonal-group tuple
//! constructions end to end and emits machine-readable certificates;
//! the `mconv` binary in the companion crate exposes everything on the
//! command line.

#![forbid(unsafe_code)]

pub mod field;
pub mod poly;
pub mod matrix;
pub mod tuple;
pub mod convolution;
pub mod forms;
pub mod braid;
pub mod group;
pub mod catalog;
pub mod pipeline;

mod rng;

pub use field::{FieldElement, FieldError, FiniteField};
pub use matrix::{Matrix, Subspace};
pub use tuple::RepTuple;
