//! Shared oracles for the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use lifegraph::discovery::{CiOracle, DiscreteData, MixedGraph};
use lifegraph::Result;
use rand::seq::SliceRandom;
use rand::Rng;

/// DAG over nodes `0..n` given by parent lists.
#[derive(Debug, Clone)]
pub struct Dag {
    pub parents: Vec<Vec<usize>>,
}

impl Dag {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut parents = vec![Vec::new(); n];
        for &(a, b) in edges {
            parents[b].push(a);
        }
        Dag { parents }
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (b, ps) in self.parents.iter().enumerate() {
            for &a in ps {
                out.push((a, b));
            }
        }
        out
    }

    /// Nodes ordered so that parents come first.
    pub fn topological(&self) -> Vec<usize> {
        let n = self.n();
        let mut done = vec![false; n];
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            for v in 0..n {
                if !done[v] && self.parents[v].iter().all(|&p| done[p]) {
                    done[v] = true;
                    out.push(v);
                }
            }
        }
        out
    }
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("X{i}")).collect()
}

/// Random DAG: each pair is joined with probability `density`, oriented
/// along a random permutation.
pub fn random_dag(rng: &mut impl Rng, n: usize, density: f64) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                edges.push((order[i], order[j]));
            }
        }
    }
    Dag::from_edges(n, &edges)
}

fn ancestors(dag: &Dag, seeds: &[usize]) -> Vec<bool> {
    let mut mark = vec![false; dag.n()];
    let mut stack: Vec<usize> = seeds.to_vec();
    while let Some(v) = stack.pop() {
        if !mark[v] {
            mark[v] = true;
            stack.extend(&dag.parents[v]);
        }
    }
    mark
}

/// d-separation through the moralized ancestral graph.
pub fn d_separated(dag: &Dag, x: usize, y: usize, z: &[usize]) -> bool {
    let n = dag.n();
    let mut seeds = vec![x, y];
    seeds.extend_from_slice(z);
    let keep = ancestors(dag, &seeds);
    let mut adj = vec![BTreeSet::new(); n];
    for v in (0..n).filter(|&v| keep[v]) {
        let ps = &dag.parents[v];
        for &p in ps {
            adj[v].insert(p);
            adj[p].insert(v);
        }
        for &a in ps {
            for &b in ps {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let blocked: BTreeSet<usize> = z.iter().copied().collect();
    let mut seen = vec![false; n];
    let mut stack = vec![x];
    while let Some(v) = stack.pop() {
        if v == y {
            return false;
        }
        if seen[v] {
            continue;
        }
        seen[v] = true;
        for &w in &adj[v] {
            if !blocked.contains(&w) && !seen[w] {
                stack.push(w);
            }
        }
    }
    true
}

pub struct DsepOracle<'a>(pub &'a Dag);

impl CiOracle for DsepOracle<'_> {
    fn independent(&self, x: usize, y: usize, given: &[usize]) -> Result<bool> {
        Ok(d_separated(self.0, x, y, given))
    }
}

fn v_structures(dag: &Dag) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for (c, ps) in dag.parents.iter().enumerate() {
        for &a in ps {
            for &b in ps {
                let joined = dag.parents[a].contains(&b) || dag.parents[b].contains(&a);
                if a < b && !joined {
                    out.insert((a, c, b));
                }
            }
        }
    }
    out
}

fn acyclic(dag: &Dag) -> bool {
    let n = dag.n();
    let mut done = vec![false; n];
    for _ in 0..n {
        match (0..n).find(|&v| !done[v] && dag.parents[v].iter().all(|&p| done[p])) {
            Some(v) => done[v] = true,
            None => return false,
        }
    }
    true
}

/// Every DAG with the skeleton and v-structures of `dag`, by enumeration.
pub fn equivalence_class(dag: &Dag) -> Vec<Dag> {
    let edges = dag.edges();
    let target = v_structures(dag);
    let mut out = Vec::new();
    for mask in 0u32..1 << edges.len() {
        let flipped: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| if mask >> k & 1 == 1 { (b, a) } else { (a, b) })
            .collect();
        let cand = Dag::from_edges(dag.n(), &flipped);
        if acyclic(&cand) && v_structures(&cand) == target {
            out.push(cand);
        }
    }
    out
}

/// CPDAG of `dag`: an edge is directed when every member of the class agrees.
pub fn cpdag_oracle(dag: &Dag, names: &[String]) -> MixedGraph {
    let class = equivalence_class(dag);
    let mut g = MixedGraph::new(names.iter().cloned()).unwrap();
    for (a, b) in dag.edges() {
        let forward = class.iter().filter(|d| d.parents[b].contains(&a)).count();
        if forward == class.len() {
            g.add_directed(&names[a], &names[b]).unwrap();
        } else if forward == 0 {
            g.add_directed(&names[b], &names[a]).unwrap();
        } else {
            g.add_undirected(&names[a], &names[b]).unwrap();
        }
    }
    g
}

/// Binary samples from `dag`. The chance of a one rises with the number of
/// parents that are one, so every edge carries a visible dependence.
pub fn sample_binary(rng: &mut impl Rng, dag: &Dag, rows: usize) -> DiscreteData {
    let n = dag.n();
    let tables: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let k = dag.parents[v].len();
            (0..1usize << k)
                .map(|c| {
                    let base = if k == 0 {
                        0.5
                    } else {
                        0.15 + 0.7 * c.count_ones() as f64 / k as f64
                    };
                    base + rng.random_range(-0.05..0.05)
                })
                .collect()
        })
        .collect();
    let order = dag.topological();
    let mut columns = vec![vec![0u8; rows]; n];
    for r in 0..rows {
        for &v in &order {
            let config = dag.parents[v]
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &p)| acc | (columns[p][r] as usize) << k);
            columns[v][r] = u8::from(rng.random_bool(tables[v][config]));
        }
    }
    DiscreteData::new(names(n), columns).unwrap()
}
