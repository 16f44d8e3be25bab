use std::collections::{BTreeSet, HashMap};

use super::MixedGraph;

/// Contract `g` onto `event_nodes`.
///
/// `A -> B` is kept when `g` has a path from `A` to `B` whose interior nodes
/// are all outside `event_nodes`. Paths made only of directed edges give a
/// directed edge. When neither direction has such a path but undirected
/// edges connect the pair both ways, the result is undirected.
/// Remaining one-way connections through undirected edges stay directed.
pub fn reduce_to_events(g: &MixedGraph, event_nodes: &[String]) -> MixedGraph {
    let keep: Vec<&String> = g.nodes.iter().filter(|n| event_nodes.contains(n)).collect();
    let index: HashMap<&String, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let n = g.nodes.len();
    let is_event: Vec<bool> = g.nodes.iter().map(|v| event_nodes.contains(v)).collect();

    let mut directed = vec![Vec::new(); n];
    let mut any = vec![Vec::new(); n];
    for (a, b) in &g.directed {
        directed[index[a]].push(index[b]);
        any[index[a]].push(index[b]);
    }
    for (a, b) in &g.undirected {
        any[index[a]].push(index[b]);
        any[index[b]].push(index[a]);
    }

    let reach = |succ: &Vec<Vec<usize>>, from: usize| -> Vec<bool> {
        let mut hit = vec![false; n];
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(a) = stack.pop() {
            for &b in &succ[a] {
                hit[b] = true;
                if !seen[b] && !is_event[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        hit
    };
    let dreach: Vec<Vec<bool>> = (0..n).map(|a| reach(&directed, a)).collect();
    let areach: Vec<Vec<bool>> = (0..n).map(|a| reach(&any, a)).collect();

    let mut out = MixedGraph {
        nodes: keep.iter().map(|s| (*s).clone()).collect(),
        directed: BTreeSet::new(),
        undirected: BTreeSet::new(),
    };
    for (i, a) in keep.iter().enumerate() {
        for b in &keep[i + 1..] {
            let (x, y) = (index[a], index[b]);
            let (dxy, dyx) = (dreach[x][y], dreach[y][x]);
            let (axy, ayx) = (areach[x][y], areach[y][x]);
            if !dxy && !dyx && axy && ayx {
                let pair = if a <= b {
                    ((*a).clone(), (*b).clone())
                } else {
                    ((*b).clone(), (*a).clone())
                };
                out.undirected.insert(pair);
                continue;
            }
            if axy {
                out.directed.insert(((*a).clone(), (*b).clone()));
            }
            if ayx {
                out.directed.insert(((*b).clone(), (*a).clone()));
            }
        }
    }
    out
}
