use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named graph with directed and undirected edges.
///
/// A pair of nodes carries at most one undirected edge or up to two directed
/// edges; `A -> B` together with `B -> A` marks a bidirectional relation.
/// Undirected edges are stored with their endpoints in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedGraph {
    pub nodes: Vec<String>,
    pub directed: BTreeSet<(String, String)>,
    pub undirected: BTreeSet<(String, String)>,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl MixedGraph {
    pub fn new<S: Into<String>>(nodes: impl IntoIterator<Item = S>) -> Result<Self> {
        let nodes: Vec<String> = nodes.into_iter().map(Into::into).collect();
        let unique: BTreeSet<&String> = nodes.iter().collect();
        if unique.len() != nodes.len() {
            return Err(Error::data("duplicate node name"));
        }
        Ok(MixedGraph {
            nodes,
            directed: BTreeSet::new(),
            undirected: BTreeSet::new(),
        })
    }

    fn check_pair(&self, a: &str, b: &str) -> Result<()> {
        if a == b {
            return Err(Error::data(format!("self-loop on {a}")));
        }
        for n in [a, b] {
            if !self.has_node(n) {
                return Err(Error::data(format!("unknown node {n}")));
            }
        }
        Ok(())
    }

    pub fn has_node(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n == name)
    }

    pub fn add_directed(&mut self, from: &str, to: &str) -> Result<()> {
        self.check_pair(from, to)?;
        if self.undirected.contains(&ordered(from, to)) {
            return Err(Error::data(format!(
                "{from} and {to} already joined by an undirected edge"
            )));
        }
        self.directed.insert((from.to_string(), to.to_string()));
        Ok(())
    }

    pub fn add_undirected(&mut self, a: &str, b: &str) -> Result<()> {
        self.check_pair(a, b)?;
        if self.directed.contains(&(a.to_string(), b.to_string()))
            || self.directed.contains(&(b.to_string(), a.to_string()))
        {
            return Err(Error::data(format!(
                "{a} and {b} already joined by a directed edge"
            )));
        }
        self.undirected.insert(ordered(a, b));
        Ok(())
    }

    pub fn has_directed(&self, from: &str, to: &str) -> bool {
        self.directed.contains(&(from.to_string(), to.to_string()))
    }

    pub fn has_undirected(&self, a: &str, b: &str) -> bool {
        self.undirected.contains(&ordered(a, b))
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        self.has_directed(a, b) || self.has_directed(b, a) || self.has_undirected(a, b)
    }

    pub fn edge_count(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    /// Unordered adjacencies, each as a lexicographically ordered pair.
    pub fn skeleton(&self) -> BTreeSet<(String, String)> {
        self.directed
            .iter()
            .map(|(a, b)| ordered(a, b))
            .chain(self.undirected.iter().cloned())
            .collect()
    }

    /// Colliders `a -> c <- b` with `a` and `b` non-adjacent, as `(a, c, b)`
    /// with `a < b`.
    pub fn v_structures(&self) -> BTreeSet<(String, String, String)> {
        let mut out = BTreeSet::new();
        for c in &self.nodes {
            let parents: Vec<&String> = self
                .directed
                .iter()
                .filter(|(_, to)| to == c)
                .map(|(from, _)| from)
                .collect();
            for (i, a) in parents.iter().enumerate() {
                for b in &parents[i + 1..] {
                    if !self.adjacent(a, b) {
                        let (a, b) = ordered(a, b);
                        out.insert((a, c.clone(), b));
                    }
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate graph JSON.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MixedGraph = serde_json::from_str(text)?;
        let mut g = MixedGraph::new(raw.nodes)?;
        for (a, b) in &raw.directed {
            g.add_directed(a, b)?;
        }
        for (a, b) in &raw.undirected {
            g.add_undirected(a, b)?;
        }
        Ok(g)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph G {\n");
        for n in &self.nodes {
            let _ = writeln!(s, "  \"{n}\";");
        }
        for (a, b) in &self.directed {
            let _ = writeln!(s, "  \"{a}\" -> \"{b}\";");
        }
        for (a, b) in &self.undirected {
            let _ = writeln!(s, "  \"{a}\" -> \"{b}\" [dir=none];");
        }
        s.push_str("}\n");
        s
    }
}

/// Index-based partially directed graph used inside the search algorithms.
/// `dir[a][b]` marks an arrowhead at `b` on edge `a -> b`; an edge with both
/// marks is bidirected. `und` is symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Pdag {
    pub n: usize,
    dir: Vec<Vec<bool>>,
    und: Vec<Vec<bool>>,
}

impl Pdag {
    pub fn empty(n: usize) -> Self {
        Pdag {
            n,
            dir: vec![vec![false; n]; n],
            und: vec![vec![false; n]; n],
        }
    }

    pub fn complete_undirected(n: usize) -> Self {
        let mut g = Pdag::empty(n);
        for a in 0..n {
            for b in 0..n {
                g.und[a][b] = a != b;
            }
        }
        g
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.dir[a][b] || self.dir[b][a] || self.und[a][b]
    }

    /// Strictly directed `a -> b`.
    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.dir[a][b] && !self.dir[b][a]
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.und[a][b]
    }

    pub fn add_directed(&mut self, a: usize, b: usize) {
        self.und[a][b] = false;
        self.und[b][a] = false;
        self.dir[a][b] = true;
    }

    pub fn add_undirected(&mut self, a: usize, b: usize) {
        self.dir[a][b] = false;
        self.dir[b][a] = false;
        self.und[a][b] = true;
        self.und[b][a] = true;
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.dir[a][b] = false;
        self.dir[b][a] = false;
        self.und[a][b] = false;
        self.und[b][a] = false;
    }

    /// Turn `a - b` into `a -> b`.
    pub fn orient(&mut self, a: usize, b: usize) {
        self.und[a][b] = false;
        self.und[b][a] = false;
        self.dir[a][b] = true;
        self.dir[b][a] = false;
    }

    pub fn parents(&self, b: usize) -> Vec<usize> {
        (0..self.n).filter(|&a| self.is_directed(a, b)).collect()
    }

    pub fn neighbors(&self, b: usize) -> Vec<usize> {
        (0..self.n).filter(|&a| self.und[a][b]).collect()
    }

    pub fn adjacents(&self, b: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&a| a != b && self.adjacent(a, b))
            .collect()
    }

    pub fn is_clique(&self, nodes: &[usize]) -> bool {
        nodes
            .iter()
            .enumerate()
            .all(|(i, &a)| nodes[i + 1..].iter().all(|&b| self.adjacent(a, b)))
    }

    pub fn to_mixed(&self, names: &[String]) -> MixedGraph {
        let mut g = MixedGraph {
            nodes: names.to_vec(),
            directed: BTreeSet::new(),
            undirected: BTreeSet::new(),
        };
        for a in 0..self.n {
            for b in 0..self.n {
                if self.dir[a][b] {
                    g.directed.insert((names[a].clone(), names[b].clone()));
                } else if a < b && self.und[a][b] {
                    g.undirected.insert(ordered(&names[a], &names[b]));
                }
            }
        }
        g
    }

    /// Apply Meek's orientation rules until nothing changes. Bidirected
    /// edges are left alone and never used as evidence.
    pub fn apply_meek_rules(&mut self) {
        let n = self.n;
        loop {
            let mut changed = false;
            for a in 0..n {
                for b in 0..n {
                    if a == b || !self.is_undirected(a, b) {
                        continue;
                    }
                    if self.meek_orients(a, b) {
                        self.orient(a, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Whether one of the four rules forces `a - b` into `a -> b`.
    fn meek_orients(&self, a: usize, b: usize) -> bool {
        let n = self.n;
        // R1: c -> a - b, c and b non-adjacent
        if (0..n).any(|c| c != b && self.is_directed(c, a) && !self.adjacent(c, b)) {
            return true;
        }
        // R2: a -> c -> b
        if (0..n).any(|c| self.is_directed(a, c) && self.is_directed(c, b)) {
            return true;
        }
        // R3: a - c -> b, a - d -> b, c and d non-adjacent
        let mids: Vec<usize> = (0..n)
            .filter(|&c| self.is_undirected(a, c) && self.is_directed(c, b))
            .collect();
        for (i, &c) in mids.iter().enumerate() {
            if mids[i + 1..].iter().any(|&d| !self.adjacent(c, d)) {
                return true;
            }
        }
        // R4: a - c -> d -> b with a adjacent to c, c and b non-adjacent
        for c in 0..n {
            if c == b || !self.adjacent(a, c) || self.adjacent(c, b) {
                continue;
            }
            if (0..n)
                .any(|d| self.is_directed(c, d) && self.is_directed(d, b) && self.adjacent(a, d))
            {
                return true;
            }
        }
        false
    }

    /// Pattern of a DAG: skeleton plus v-structures, closed under Meek's rules.
    pub fn dag_to_cpdag(dag: &Pdag) -> Pdag {
        let n = dag.n;
        let mut out = Pdag::empty(n);
        for a in 0..n {
            for b in (a + 1)..n {
                if dag.adjacent(a, b) {
                    out.add_undirected(a, b);
                }
            }
        }
        for c in 0..n {
            let parents = dag.parents(c);
            for (i, &a) in parents.iter().enumerate() {
                for &b in &parents[i + 1..] {
                    if !dag.adjacent(a, b) {
                        out.orient(a, c);
                        out.orient(b, c);
                    }
                }
            }
        }
        out.apply_meek_rules();
        out
    }

    /// A DAG in the class described by this PDAG (Dor and Tarsi), or `None`
    /// when no consistent extension exists.
    pub fn consistent_extension(&self) -> Option<Pdag> {
        let n = self.n;
        let mut dag = self.clone();
        let mut work = self.clone();
        let mut alive = vec![true; n];
        for _ in 0..n {
            let x = (0..n).find(|&x| {
                if !alive[x] {
                    return false;
                }
                let is_sink = (0..n).all(|y| !alive[y] || !work.is_directed(x, y));
                if !is_sink {
                    return false;
                }
                let adj: Vec<usize> = (0..n)
                    .filter(|&y| alive[y] && y != x && work.adjacent(x, y))
                    .collect();
                (0..n)
                    .filter(|&y| alive[y] && work.is_undirected(x, y))
                    .all(|y| adj.iter().all(|&z| z == y || work.adjacent(y, z)))
            })?;
            for y in 0..n {
                if alive[y] && work.is_undirected(x, y) {
                    dag.orient(y, x);
                }
            }
            alive[x] = false;
            for y in 0..n {
                work.remove_edge(x, y);
            }
        }
        Some(dag)
    }

    #[cfg(test)]
    pub fn is_acyclic(&self) -> bool {
        // Kahn over strictly directed edges
        let n = self.n;
        let mut indeg: Vec<usize> = (0..n).map(|b| self.parents(b).len()).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&b| indeg[b] == 0).collect();
        let mut seen = 0;
        while let Some(a) = stack.pop() {
            seen += 1;
            for b in 0..n {
                if self.is_directed(a, b) {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        stack.push(b);
                    }
                }
            }
        }
        seen == n
    }
}
