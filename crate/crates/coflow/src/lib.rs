//! File formats, workload generation, the benchmark harness and the
//! pipelines behind the `coflow` command.

pub mod bench;
pub mod config;
pub mod gen;
pub mod io;
pub mod run;
