//! Benchmark harness, report writers and the `snap` command line.

pub mod checks;
pub mod cli;
pub mod harness;
pub mod io;
pub mod report;
