use std::collections::BTreeSet;

use super::MixedGraph;
use crate::error::{Error, Result};

/// Whether two graphs share skeleton and colliders.
pub fn same_mec(a: &MixedGraph, b: &MixedGraph) -> Result<bool> {
    let na: BTreeSet<&String> = a.nodes.iter().collect();
    let nb: BTreeSet<&String> = b.nodes.iter().collect();
    if na != nb {
        return Err(Error::data("graphs have different node sets"));
    }
    Ok(a.skeleton() == b.skeleton() && a.v_structures() == b.v_structures())
}
