//! File formats, the realization planner and the `forge` command line.

pub mod cli;
pub mod demo;
pub mod json;
pub mod pipeline;
pub mod samples;
