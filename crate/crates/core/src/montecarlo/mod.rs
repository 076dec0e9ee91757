//! Sampling experiments that check the probability bounds empirically.
//!
//! Results depend only on the configuration and seed: samples are drawn in
//! fixed-size batches, batch `i` from its own generator stream, and per-batch
//! integer counts are summed, so the worker count never changes an output.

pub mod config;
pub mod engine;
pub mod measure;
pub mod sampling;
pub mod suites;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use engine::{
    default_bound, dominance_report, estimate_cdf, estimate_cdf_with, estimate_failure_rate,
    write_rows_csv, write_rows_json, DominanceReport, EstimateRow, BATCH_SIZE, SLACK_SIGMAS,
};
pub use measure::{exact_statistic, measure_insphere, measure_whichside, Binner};
pub use sampling::{batch_rng, sample_ball, sample_cube, sample_grid, SampleDomain};
pub use suites::{run_suite, suite, Case, CaseBound, SUITE_NAMES};
