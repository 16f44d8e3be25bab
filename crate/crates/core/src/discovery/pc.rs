use std::collections::BTreeMap;

use rayon::prelude::*;

use super::citest::{CiOracle, GTest};
use super::graph::{MixedGraph, Pdag};
use super::DiscreteData;
use crate::error::{Error, Result};

/// An adjacency to delete and the set that separates its endpoints.
type Removal = ((usize, usize), Vec<usize>);

/// All `k`-element subsets of `items`, in lexicographic order of positions.
pub(crate) fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(
        items: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// PC with the G² test at level `alpha`.
pub fn pc_discover(data: &DiscreteData, alpha: f64) -> Result<MixedGraph> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha {alpha} outside (0,1)")));
    }
    if data.rows() == 0 {
        return Err(Error::data("no observations"));
    }
    pc_with_test(&data.names, &GTest { data, alpha })
}

/// PC over `names.len()` variables with an arbitrary independence oracle.
///
/// The skeleton phase is order independent: adjacencies are frozen at the
/// start of each conditioning-set size and removals are applied afterwards.
/// Conflicting collider orientations leave the edge bidirected.
pub fn pc_with_test<O: CiOracle + Sync>(names: &[String], oracle: &O) -> Result<MixedGraph> {
    let n = names.len();
    if n < 2 {
        return Err(Error::data("PC needs at least two variables"));
    }
    let mut g = Pdag::complete_undirected(n);
    let mut sepsets: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();

    for size in 0..=n - 2 {
        let adj: Vec<Vec<usize>> = (0..n).map(|v| g.adjacents(v)).collect();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| ((x + 1)..n).map(move |y| (x, y)))
            .filter(|&(x, y)| g.adjacent(x, y))
            .filter(|&(x, y)| adj[x].len() > size || adj[y].len() > size)
            .collect();
        if pairs.is_empty() {
            break;
        }
        let found: Vec<Option<Removal>> = pairs
            .par_iter()
            .map(|&(x, y)| -> Result<_> {
                for (a, b) in [(x, y), (y, x)] {
                    let pool: Vec<usize> = adj[a].iter().copied().filter(|&v| v != b).collect();
                    if pool.len() < size {
                        continue;
                    }
                    for s in subsets(&pool, size) {
                        if oracle.independent(x, y, &s)? {
                            return Ok(Some(((x, y), s)));
                        }
                    }
                }
                Ok(None)
            })
            .collect::<Result<_>>()?;
        for ((x, y), s) in found.into_iter().flatten() {
            g.remove_edge(x, y);
            sepsets.insert((x, y), s);
        }
    }

    // colliders read off the skeleton, then applied together
    let mut arrows = Vec::new();
    for z in 0..n {
        let adj = g.adjacents(z);
        for (i, &x) in adj.iter().enumerate() {
            for &y in &adj[i + 1..] {
                if g.adjacent(x, y) {
                    continue;
                }
                let key = (x.min(y), x.max(y));
                if !sepsets.get(&key).is_some_and(|s| s.contains(&z)) {
                    arrows.push((x, z));
                    arrows.push((y, z));
                }
            }
        }
    }
    for (a, b) in arrows {
        g.add_directed(a, b);
    }
    g.apply_meek_rules();
    Ok(g.to_mixed(names))
}
