//! Quantitative toolkit for Gromov-hyperbolic spaces.
//!
//! Two metric backends ([`graph::CayleySpace`] and [`hplane::HalfPlane`]) share
//! the primitives of [`metric`]. On top of them sit translation-length brackets
//! and Margulis domains ([`displacement`]), ping-pong freeness tests
//! ([`freeness`]), growth and doubling measurements ([`entropy`]) and the
//! catalog of explicit bounds ([`bounds`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bounds;
pub mod cli;
pub mod displacement;
pub mod entropy;
pub mod error;
pub mod freeness;
pub mod graph;
pub mod hplane;
pub mod metric;
pub mod report;

pub use error::{Error, Result};
pub use report::{BoundReport, Direction};
