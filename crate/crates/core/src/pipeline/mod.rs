//! End-to-end orchestration: calendars to discovered graph to fitted
//! transition models and their reports.

mod config;
mod discover;
mod report;
mod run;

pub use config::{Algorithm, PipelineConfig};
pub use discover::{discover, edge_pairs, project_to_events, DiscoveryOutcome};
pub use report::{
    averaged_csv, conditioned_csv, cumhazard_csv, ecdf_csv, emit_edge_map, survival_csv,
    EdgeCurves, FitReport, FitRow, RunMetadata,
};
pub use run::{
    fit_and_report, fit_pair, load_calendars, report_pairs, run_pipeline, PairFit,
    CONDITIONED_COVARIATES,
};
