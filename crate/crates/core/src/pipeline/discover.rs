use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::Algorithm;
use crate::calendar::Event;
use crate::discovery::{
    ges_discover_with, pc_discover, reduce_to_events, same_mec, DiscreteData, MixedGraph,
};
use crate::elaboration::{pair_table, EventPairObservation};
use crate::error::{Error, Result};

const NEXT_SUFFIX: &str = "_next";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryOutcome {
    pub pc: Option<MixedGraph>,
    pub ges: Option<MixedGraph>,
    pub same_mec: Option<bool>,
    /// Events-only graph the survival models are fitted on.
    pub events: MixedGraph,
    pub dropped_columns: Vec<String>,
}

/// Learn the variable graph over event-pair observations and project it to
/// an events graph. With both algorithms the GES graph is used.
pub fn discover(
    obs: &[EventPairObservation],
    algorithm: Algorithm,
    alpha: f64,
    bic_penalty: f64,
) -> Result<DiscoveryOutcome> {
    if obs.is_empty() {
        return Err(Error::data("no event-pair observations to learn from"));
    }
    let (names, cols) = pair_table(obs);
    let full = DiscreteData::new(names, cols)?;
    let keep: Vec<usize> = (0..full.vars()).filter(|&j| full.levels[j] > 1).collect();
    let dropped_columns: Vec<String> = (0..full.vars())
        .filter(|j| !keep.contains(j))
        .map(|j| full.names[j].clone())
        .collect();
    for c in &dropped_columns {
        warn!("column {c} is constant and is left out of discovery");
    }
    if keep.len() < 2 {
        return Err(Error::data(
            "fewer than two non-constant variables for discovery",
        ));
    }
    let data = full.select(&keep);

    let pc = match algorithm {
        Algorithm::Pc | Algorithm::Both => Some(pc_discover(&data, alpha)?),
        Algorithm::Ges => None,
    };
    let ges = match algorithm {
        Algorithm::Ges | Algorithm::Both => Some(ges_discover_with(&data, bic_penalty)?.0),
        Algorithm::Pc => None,
    };
    let same = match (&pc, &ges) {
        (Some(a), Some(b)) => Some(same_mec(a, b)?),
        _ => None,
    };
    let chosen = ges
        .as_ref()
        .or(pc.as_ref())
        .expect("at least one algorithm ran");
    let mut events = project_to_events(chosen);
    events.directed.retain(|(a, b)| {
        let keep = follows(obs, a, b);
        if !keep {
            info!("edge {a} -> {b} dropped: {a} does not raise the chance of {b} next");
        }
        keep
    });
    Ok(DiscoveryOutcome {
        events,
        pc,
        ges,
        same_mec: same,
        dropped_columns,
    })
}

/// Whether `P(b next | a now) > P(b next | no a now)` in the observations.
fn follows(obs: &[EventPairObservation], a: &str, b: &str) -> bool {
    let (Ok(a), Ok(b)) = (a.parse::<Event>(), b.parse::<Event>()) else {
        return false;
    };
    let (Some(ia), Some(ib)) = (
        Event::DISCOVERY.iter().position(|&e| e == a),
        Event::DISCOVERY.iter().position(|&e| e == b),
    ) else {
        return false;
    };
    let mut n = [0usize; 2];
    let mut hit = [0usize; 2];
    for o in obs {
        let k = usize::from(o.current[ia]);
        n[k] += 1;
        hit[k] += usize::from(o.next[ib]);
    }
    if n[1] == 0 {
        return false;
    }
    if n[0] == 0 {
        return true;
    }
    // cross-multiplied to stay in integers
    hit[1] * n[0] > hit[0] * n[1]
}

fn next_of(name: &str) -> Option<&str> {
    name.strip_suffix(NEXT_SUFFIX)
}

/// Collapse a graph over current-year variables and `*_next` event
/// variables into a graph over the four events.
///
/// Edges between the two time slices point forward in time. The graph is
/// then contracted onto the event variables of both slices, so paths
/// through the state variables count, and every `A -> B_next` becomes
/// `A -> B`. Edges within one slice and from an event to its own next
/// occurrence carry no transition and are dropped.
pub fn project_to_events(g: &MixedGraph) -> MixedGraph {
    let mut timed = MixedGraph {
        nodes: g.nodes.clone(),
        directed: Default::default(),
        undirected: Default::default(),
    };
    let forward = |a: &String, b: &String| match (next_of(a), next_of(b)) {
        (None, Some(_)) => Some((a.clone(), b.clone())),
        (Some(_), None) => Some((b.clone(), a.clone())),
        _ => None,
    };
    for (a, b) in &g.directed {
        let e = forward(a, b).unwrap_or((a.clone(), b.clone()));
        timed.directed.insert(e);
    }
    for (a, b) in &g.undirected {
        match forward(a, b) {
            Some(e) => {
                timed.directed.insert(e);
            }
            None => {
                timed.undirected.insert((a.clone(), b.clone()));
            }
        }
    }

    let events: Vec<String> = Event::DISCOVERY
        .iter()
        .flat_map(|e| [e.name().to_string(), format!("{}{NEXT_SUFFIX}", e.name())])
        .collect();
    let reduced = reduce_to_events(&timed, &events);

    let mut out =
        MixedGraph::new(Event::DISCOVERY.iter().map(|e| e.name())).expect("distinct names");
    let cross = reduced.directed.iter().chain(reduced.undirected.iter());
    for (a, b) in cross {
        let (from, to) = match (next_of(a), next_of(b)) {
            (None, Some(nb)) => (a.as_str(), nb),
            (Some(na), None) => (b.as_str(), na),
            _ => continue,
        };
        if from != to {
            out.directed.insert((from.to_string(), to.to_string()));
        }
    }
    out
}

/// Ordered (cause, effect) pairs of an events graph: each directed edge,
/// and both directions of each undirected edge.
pub fn edge_pairs(g: &MixedGraph) -> Result<Vec<(Event, Event)>> {
    let mut pairs = Vec::new();
    for (a, b) in &g.directed {
        pairs.push((a.parse()?, b.parse()?));
    }
    for (a, b) in &g.undirected {
        pairs.push((a.parse()?, b.parse()?));
        pairs.push((b.parse()?, a.parse()?));
    }
    pairs.sort();
    pairs.dedup();
    Ok(pairs)
}
