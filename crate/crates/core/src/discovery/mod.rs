//! Structure learning over discrete event and state variables.

mod citest;
mod data;
mod ges;
mod graph;
mod mec;
mod pc;
mod reduce;

pub use citest::{ci_test, CiOracle, CiTestResult, GTest};
pub use data::DiscreteData;
pub use ges::{ges_discover, ges_discover_with, BicScore, GesTrace};
pub use graph::MixedGraph;
pub use mec::same_mec;
pub use pc::{pc_discover, pc_with_test};
pub use reduce::reduce_to_events;
