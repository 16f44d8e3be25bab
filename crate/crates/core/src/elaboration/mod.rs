//! Turning calendars into model inputs: event-pair observations for
//! discovery, censored time-to-event records for survival models and the
//! stratified train/test split.

mod pairs;
mod split;
mod tte;

pub use pairs::{
    extract_pair_observations, pair_table, read_pair_observations, write_pair_observations,
    EventPairObservation, PAIR_HEADER,
};
pub use split::{stratified_split, SplitDataset};
pub use tte::{
    extract_tte, extract_tte_with, read_tte, read_tte_from, snapshot_at, write_tte, write_tte_to,
    CovariateKind, CovariateSnapshot, TteRecord, CENSORED_DURATION, NEVER_HAPPENED,
    SNAPSHOT_FIELDS,
};
