//! Benchmark generators and the batch runner behind the command line.

mod generators;
mod run;

pub use generators::{generate, Family, GeneratorParams};
pub use run::{
    append_records, parse_threshold, read_records, run, write_log, Mode, RunConfig, RunRecord,
    RunReport, CSV_HEADER, DEFAULT_RESOLUTION,
};
