//! Config-driven experiment runs: presets, run directories, manifests,
//! reports, comparisons and plot series.

pub mod compare;
pub mod config;
pub mod manifest;
pub mod plot;
pub mod presets;
pub mod run;

pub use compare::{compare_runs, Comparison, ComparisonRow};
pub use config::{
    parse_config, parse_config_str, CsvSource, DataSource, ExperimentConfig, Scenario,
};
pub use manifest::{Fingerprint, RunManifest, RunStatus, SeedPlan};
pub use plot::{emit_plot_data, SERIES_HEADER};
pub use run::{
    build_bundle, rerun_from_manifest, run_experiment, RunReport, RunSummary, ITERATIONS_HEADER,
    LAYOUT,
};
