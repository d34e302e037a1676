//! Experiment configuration, Monte Carlo orchestration and summaries.
//!
//! Each trial draws its noise from the stream `(trial << 8) | purpose` of the
//! base seed, so results do not depend on scheduling. Every method within a
//! trial sees the same dataset; the `dataset_hash` column makes that checkable.

mod config;
mod summary;
mod trial;

pub use config::{
    preset, presets, Channel, EstimationSection, ExcitationSection, ExperimentConfig, Method, Nominal, NominalSpec,
    OutputSection, Preset, TfSection, PURPOSE_PRIMARY, PURPOSE_SECOND_STAGE,
};
pub use summary::{
    boxplot_path, quantile_sorted, summarize, summarize_rows, write_boxplot_data, write_summary, FiveNumber, SummaryStats,
};
pub use trial::{
    convergence_sweep, read_results, run_monte_carlo, run_trial, write_results, write_sweep, SweepRow, TrialResult,
    STAGE_ONE_LABEL,
};
