//! Verification front end for `capmix-core`: TOML suite configs, suite
//! orchestration over a thread pool, JSON/CSV reports, body files and a
//! convex-hull volume oracle.

pub mod bodyio;
pub mod config;
pub mod hull;
pub mod meshio;
pub mod report;
pub mod study;
pub mod suites;

pub use config::{parse_config, parse_config_str, SuiteConfig};
pub use report::{CheckRecord, RunReport};
pub use suites::run_suite;
