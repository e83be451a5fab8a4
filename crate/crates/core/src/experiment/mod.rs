//! Configuration-driven experiments: config parsing, replicated runs with
//! derived seeds, oracle runs, and CSV artifacts.
//!
//! A config file holds one `[name]` section per experiment with flat
//! `key = value` lines. Running an experiment writes `long.csv` (one row per
//! recorded iteration and replication), `summary.csv` (mean and standard
//! deviation across replications at sample checkpoints) and `manifest.txt`
//! (effective config and seeds).

mod config;
mod output;
mod presets;
mod run;

pub use config::{load_config, parse_config, parse_sections, Algorithm, EnvSpec, EvalMethod, ExperimentConfig, GridSpec};
pub use output::{
    fmt_num, long_header, oracle_lines, read_long_csv, run_experiment, summarize, write_long_csv,
    write_oracle_table, write_summary_csv, ExperimentReport, LongRecord, Status, SummaryRow, ThetaColumns,
    ThetaLayout,
};
pub use presets::{preset, preset_names};
pub use run::{
    build_model, evaluate_config, evaluate_params, initial_policy, learn, rmc_config, run_oracle,
    run_replications, Evaluation, Model, Oracle, Replication, Row, EVAL_STREAM,
};
