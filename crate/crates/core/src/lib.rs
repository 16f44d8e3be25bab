//! Life-course event graphs and transition-time models.
//!
//! The pipeline has two levels. Causal discovery (PC and GES) over yearly
//! event-pair observations yields a graph of life events; each edge of that
//! graph is then modelled as a time-to-event problem with Kaplan-Meier,
//! Nelson-Aalen and Cox proportional-hazards estimators.

pub mod calendar;
pub mod cox;
pub mod discovery;
pub mod elaboration;
pub mod error;
pub mod pipeline;
pub mod univariate;

pub use error::{Error, Result};
