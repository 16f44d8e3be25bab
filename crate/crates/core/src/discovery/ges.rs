use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};

use super::graph::{MixedGraph, Pdag};
use super::DiscreteData;
use crate::error::{Error, Result};

/// Scores after each accepted step of the two phases.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GesTrace {
    pub initial: f64,
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

/// Decomposable multinomial BIC with memoized local scores.
pub struct BicScore<'a> {
    data: &'a DiscreteData,
    penalty: f64,
    cache: RefCell<HashMap<(usize, u64), f64>>,
}

impl<'a> BicScore<'a> {
    pub fn new(data: &'a DiscreteData, penalty: f64) -> Self {
        BicScore {
            data,
            penalty,
            cache: RefCell::new(HashMap::new()),
        }
    }

    /// `LL(node | parents) - penalty/2 * ln(N) * (r - 1) * q`.
    pub fn local(&self, node: usize, parents: &[usize]) -> f64 {
        let mask = parents.iter().fold(0u64, |m, &p| m | 1 << p);
        if let Some(&v) = self.cache.borrow().get(&(node, mask)) {
            return v;
        }
        let mut ps: Vec<usize> = parents.to_vec();
        ps.sort_unstable();
        let d = self.data;
        let r = d.levels[node];
        let mut counts: HashMap<u64, Vec<u32>> = HashMap::new();
        for row in 0..d.rows() {
            let key = d.config_key(&ps, row);
            counts.entry(key).or_insert_with(|| vec![0; r])[d.columns[node][row] as usize] += 1;
        }
        let mut keys: Vec<&u64> = counts.keys().collect();
        keys.sort_unstable();
        let mut ll = 0.0;
        for k in keys {
            let c = &counts[k];
            let total: f64 = c.iter().map(|&v| v as f64).sum();
            for &v in c {
                if v > 0 {
                    let v = v as f64;
                    ll += v * (v / total).ln();
                }
            }
        }
        let q: f64 = ps.iter().map(|&p| d.levels[p] as f64).product();
        let score = ll - self.penalty / 2.0 * (d.rows() as f64).ln() * (r as f64 - 1.0) * q;
        self.cache.borrow_mut().insert((node, mask), score);
        score
    }

    /// Score of a DAG.
    pub(crate) fn total(&self, dag: &Pdag) -> f64 {
        (0..dag.n).map(|v| self.local(v, &dag.parents(v))).sum()
    }
}

/// GES with the default BIC penalty of 1.
pub fn ges_discover(data: &DiscreteData) -> Result<MixedGraph> {
    ges_discover_with(data, 1.0).map(|(g, _)| g)
}

/// Greedy equivalence search. Forward phase applies the best score-raising
/// insertion until none raises the score; backward phase does the same with
/// deletions. Ties go to the lexicographically first `(from, to)` pair.
pub fn ges_discover_with(data: &DiscreteData, penalty: f64) -> Result<(MixedGraph, GesTrace)> {
    let n = data.vars();
    if n < 2 {
        return Err(Error::data("GES needs at least two variables"));
    }
    if n > 63 {
        return Err(Error::data("GES supports at most 63 variables"));
    }
    if data.rows() < n + 2 {
        return Err(Error::data(format!(
            "GES needs at least {} rows, got {}",
            n + 2,
            data.rows()
        )));
    }
    if let Some(j) = (0..n).find(|&j| data.levels[j] < 2) {
        return Err(Error::data(format!(
            "column {} has zero variance",
            data.names[j]
        )));
    }
    if !(penalty > 0.0 && penalty.is_finite()) {
        return Err(Error::config(format!(
            "BIC penalty {penalty} must be positive"
        )));
    }
    let score = BicScore::new(data, penalty);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.names[a].cmp(&data.names[b]));

    let mut g = Pdag::empty(n);
    let mut trace = GesTrace {
        initial: score.total(&g),
        ..GesTrace::default()
    };
    while let Some(op) = best_insert(&g, &score, &order) {
        g = apply(&g, op, true)?;
        trace
            .forward
            .push(score.total(&g.consistent_extension().expect("CPDAG extends")));
    }
    while let Some(op) = best_delete(&g, &score, &order) {
        g = apply(&g, op, false)?;
        trace
            .backward
            .push(score.total(&g.consistent_extension().expect("CPDAG extends")));
    }
    Ok((g.to_mixed(&data.names), trace))
}

#[derive(Debug, Clone)]
struct Op {
    x: usize,
    y: usize,
    set: Vec<usize>,
}

fn apply(g: &Pdag, op: Op, insert: bool) -> Result<Pdag> {
    let mut next = g.clone();
    if insert {
        next.add_directed(op.x, op.y);
        for &t in &op.set {
            next.orient(t, op.y);
        }
    } else {
        next.remove_edge(op.x, op.y);
        for &h in &op.set {
            next.orient(op.y, h);
            if next.is_undirected(op.x, h) {
                next.orient(op.x, h);
            }
        }
    }
    let dag = next.consistent_extension().ok_or_else(|| {
        Error::numerical("GES step produced a graph with no consistent extension")
    })?;
    Ok(Pdag::dag_to_cpdag(&dag))
}

fn members(items: &[usize], mask: u32) -> Vec<usize> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &v)| v)
        .collect()
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Neighbours of `y` adjacent to `x`.
fn na(g: &Pdag, y: usize, x: usize) -> Vec<usize> {
    g.neighbors(y)
        .into_iter()
        .filter(|&v| g.adjacent(v, x))
        .collect()
}

/// Whether every semi-directed path from `from` to `to` meets `block`.
fn paths_blocked(g: &Pdag, from: usize, to: usize, block: &[usize]) -> bool {
    let mut seen = vec![false; g.n];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(a) = queue.pop_front() {
        for b in 0..g.n {
            if seen[b] || !(g.is_undirected(a, b) || g.is_directed(a, b)) {
                continue;
            }
            if b == to {
                return false;
            }
            if block.contains(&b) {
                continue;
            }
            seen[b] = true;
            queue.push_back(b);
        }
    }
    true
}

fn best_insert(g: &Pdag, score: &BicScore, order: &[usize]) -> Option<Op> {
    let mut best: Option<(f64, Op)> = None;
    for &x in order {
        for &y in order {
            if x == y || g.adjacent(x, y) {
                continue;
            }
            let na_yx = na(g, y, x);
            let candidates: Vec<usize> = g
                .neighbors(y)
                .into_iter()
                .filter(|&t| !g.adjacent(t, x))
                .collect();
            let parents = g.parents(y);
            for mask in 0..(1u32 << candidates.len()) {
                let t = members(&candidates, mask);
                let cond = union(&na_yx, &t);
                if !g.is_clique(&cond) || !paths_blocked(g, y, x, &cond) {
                    continue;
                }
                let base = union(&cond, &parents);
                let delta = score.local(y, &union(&base, &[x])) - score.local(y, &base);
                if delta > 0.0 && best.as_ref().is_none_or(|(d, _)| delta > *d) {
                    best = Some((delta, Op { x, y, set: t }));
                }
            }
        }
    }
    best.map(|(_, op)| op)
}

fn best_delete(g: &Pdag, score: &BicScore, order: &[usize]) -> Option<Op> {
    let mut best: Option<(f64, Op)> = None;
    for &x in order {
        for &y in order {
            if x == y || !(g.is_directed(x, y) || g.is_undirected(x, y)) {
                continue;
            }
            let na_yx = na(g, y, x);
            let parents: Vec<usize> = g.parents(y).into_iter().filter(|&p| p != x).collect();
            for mask in 0..(1u32 << na_yx.len()) {
                let h = members(&na_yx, mask);
                let rest: Vec<usize> = na_yx.iter().copied().filter(|v| !h.contains(v)).collect();
                if !g.is_clique(&rest) {
                    continue;
                }
                let base = union(&rest, &parents);
                let delta = score.local(y, &base) - score.local(y, &union(&base, &[x]));
                if delta > 0.0 && best.as_ref().is_none_or(|(d, _)| delta > *d) {
                    best = Some((delta, Op { x, y, set: h }));
                }
            }
        }
    }
    best.map(|(_, op)| op)
}
