//! Exact combinatorics for graph groupoids, twisted product groupoids,
//! convolution algebras, dimension groups and rank-2 Bratteli diagrams.
//!
//! Everything here is `no_std` with `alloc`; file formats and the command
//! line live in the `forge` crate.

#![no_std]

extern crate alloc;

pub mod convolution;
pub mod dimension;
pub mod families;
pub mod germ;
pub mod graph;
pub mod groupoid;
pub mod rank2;
pub mod report;
pub mod scalar;
pub mod twisted;

pub use report::{ValidationReport, Verdict, Violation};
