//! The transition free graph `G(p,q,n)` and the graph plumbing the SubDP
//! solvers run on.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{self, Write};

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::word::{low_mask, BitWord, ForbiddenPair};

/// Default largest `n` for which `G(p,q,n)` is materialized (2^14 vertices
/// with bitset rows take about 32 MiB).
pub const DEFAULT_GRAPH_CAP: usize = 14;
/// Longest pattern the per-word degree DP accepts (2^(k-1) states).
pub const MAX_DP_K: usize = 20;

/// Simple undirected graph with one adjacency bitset per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<FixedBitSet>,
}

impl Graph {
    pub fn new(vertex_count: usize) -> Self {
        Graph {
            adj: vec![FixedBitSet::with_capacity(vertex_count); vertex_count],
        }
    }

    pub fn from_edges(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::new(vertex_count);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn complete(vertex_count: usize) -> Self {
        let mut g = Graph::new(vertex_count);
        for u in 0..vertex_count {
            g.adj[u].insert_range(..);
            g.adj[u].set(u, false);
        }
        g
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.vertex_count();
        if u >= n || v >= n {
            return Err(Error::invalid(format!(
                "edge ({u},{v}) outside {n} vertices"
            )));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop at {u}")));
        }
        self.adj[u].insert(v);
        self.adj[v].insert(u);
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    /// Open neighborhood of `v`.
    pub fn row(&self, v: usize) -> &FixedBitSet {
        &self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].ones()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones(..)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.count_ones(..)).sum::<usize>() / 2
    }

    /// `|E| / |V|`.
    pub fn edge_density(&self) -> f64 {
        if self.vertex_count() == 0 {
            return 0.0;
        }
        self.edge_count() as f64 / self.vertex_count() as f64
    }

    pub fn min_degree(&self) -> usize {
        (0..self.vertex_count())
            .map(|v| self.degree(v))
            .min()
            .unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count())
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    pub fn all_vertices(&self) -> InducedSubgraph {
        let mut members = FixedBitSet::with_capacity(self.vertex_count());
        members.insert_range(..);
        InducedSubgraph { members }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.vertex_count()).all(|u| {
            !self.adj[u].contains(u) && self.adj[u].ones().all(|v| self.adj[v].contains(u))
        })
    }
}

/// A vertex subset of some [`Graph`]; degrees are counted inside the subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedSubgraph {
    members: FixedBitSet,
}

impl InducedSubgraph {
    pub fn new(vertex_count: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = FixedBitSet::with_capacity(vertex_count);
        for v in members {
            if v >= vertex_count {
                return Err(Error::invalid(format!(
                    "member {v} outside {vertex_count} vertices"
                )));
            }
            set.insert(v);
        }
        Ok(InducedSubgraph { members: set })
    }

    pub fn from_bitset(members: FixedBitSet) -> Self {
        InducedSubgraph { members }
    }

    pub fn bitset(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_clear()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.contains(v)
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.ones()
    }

    pub fn degree_in(&self, g: &Graph, v: usize) -> usize {
        g.row(v).intersection_count(&self.members)
    }

    pub fn min_degree(&self, g: &Graph) -> usize {
        self.members()
            .map(|v| self.degree_in(g, v))
            .min()
            .unwrap_or(0)
    }

    pub fn max_degree(&self, g: &Graph) -> usize {
        self.members()
            .map(|v| self.degree_in(g, v))
            .max()
            .unwrap_or(0)
    }

    pub fn edge_count(&self, g: &Graph) -> usize {
        self.members().map(|v| self.degree_in(g, v)).sum::<usize>() / 2
    }
}

/// `G(p,q,n)`: vertex `v` is the word whose big-endian value is `v`.
#[derive(Clone, Debug)]
pub struct TransitionFreeGraph {
    fp: ForbiddenPair,
    n: usize,
    graph: Graph,
}

impl TransitionFreeGraph {
    pub fn fp(&self) -> &ForbiddenPair {
        &self.fp
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn word(&self, v: usize) -> BitWord {
        BitWord::new(v as u64, self.n).expect("vertex index fits the word length")
    }

    pub fn vertex(&self, w: &BitWord) -> Result<usize> {
        if w.len() != self.n {
            return Err(Error::invalid(format!(
                "word {w} has length {}, graph has n = {}",
                w.len(),
                self.n
            )));
        }
        Ok(w.bits() as usize)
    }

    /// Exact `|E|`.
    pub fn edge_count(&self) -> BigUint {
        BigUint::from(self.graph.edge_count())
    }

    pub fn edge_density(&self) -> f64 {
        self.graph.edge_density()
    }

    /// One `u v` line per edge (`u < v`), vertices printed as words.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for u in 0..self.graph.vertex_count() {
            for v in self.graph.neighbors(u).filter(|&v| v > u) {
                writeln!(out, "{} {}", self.word(u), self.word(v))?;
            }
        }
        Ok(())
    }
}

pub fn build_graph(fp: &ForbiddenPair, n: usize) -> Result<TransitionFreeGraph> {
    build_graph_with_cap(fp, n, DEFAULT_GRAPH_CAP)
}

pub fn build_graph_with_cap(
    fp: &ForbiddenPair,
    n: usize,
    cap: usize,
) -> Result<TransitionFreeGraph> {
    if n == 0 {
        return Err(Error::invalid("word length n must be at least 1"));
    }
    if n > cap || n >= 32 {
        return Err(Error::ResourceLimit {
            what: format!("explicit graph G{fp} with n = {n}"),
            cap,
            suggestion: "use `count` (transfer-matrix counting) or per-word degree queries instead"
                .into(),
        });
    }
    let size = 1usize << n;
    let masks: Vec<(u64, u64)> = (0..size as u64).map(|w| fp.match_masks(w, n)).collect();
    let adj: Vec<FixedBitSet> = (0..size)
        .into_par_iter()
        .map(|u| {
            let (up, uq) = masks[u];
            let mut row = FixedBitSet::with_capacity(size);
            for (v, &(vp, vq)) in masks.iter().enumerate() {
                if v != u && (up & vq) | (uq & vp) == 0 {
                    row.insert(v);
                }
            }
            row
        })
        .collect();
    Ok(TransitionFreeGraph {
        fp: *fp,
        n,
        graph: Graph { adj },
    })
}

/// Number of words `b != a` transition free with `a`.
///
/// Dynamic program over the bits of `b`; the state is the last `k-1` bits.
pub fn degree_of_word(a: &BitWord, fp: &ForbiddenPair) -> Result<BigUint> {
    Ok(BigUint::from(degree_of_word_u128(a, fp)?))
}

fn degree_of_word_u128(a: &BitWord, fp: &ForbiddenPair) -> Result<u128> {
    let (n, k) = (a.len(), fp.k());
    if n < k {
        return Ok((1u128 << n) - 1);
    }
    if k > MAX_DP_K {
        return Err(Error::ResourceLimit {
            what: format!("degree DP with k = {k}"),
            cap: MAX_DP_K,
            suggestion: "shorter forbidden patterns are required".into(),
        });
    }
    let states = 1usize << (k - 1);
    let state_mask = (states - 1) as u64;
    let win_mask = low_mask(k);
    let mut count = vec![0u128; states];
    let mut next = vec![0u128; states];
    count[0] = 1;
    for j in 1..=n {
        next.iter_mut().for_each(|c| *c = 0);
        let a_win = (j >= k).then(|| (a.bits() >> (n - j)) & win_mask);
        for (s, &c) in count.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for bit in 0..2u64 {
                let b_win = ((s as u64) << 1) | bit;
                if let Some(aw) = a_win {
                    if fp.forbids(aw, b_win & win_mask) {
                        continue;
                    }
                }
                next[(b_win & state_mask) as usize] += c;
            }
        }
        std::mem::swap(&mut count, &mut next);
    }
    // b = a is always free
    Ok(count.iter().sum::<u128>() - 1)
}

/// `delta(G(p,q,n))` without materializing the graph.
pub fn min_degree(fp: &ForbiddenPair, n: usize) -> Result<BigUint> {
    min_degree_with_cap(fp, n, 2 * DEFAULT_GRAPH_CAP)
}

pub fn min_degree_with_cap(fp: &ForbiddenPair, n: usize, cap: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::invalid("word length n must be at least 1"));
    }
    if n > cap || n >= 40 {
        return Err(Error::ResourceLimit {
            what: format!("min-degree scan over 2^{n} words"),
            cap,
            suggestion: "pick a smaller n".into(),
        });
    }
    let best = (0..1u64 << n)
        .into_par_iter()
        .map(|w| degree_of_word_u128(&BitWord::new(w, n).expect("fits"), fp))
        .try_reduce(|| u128::MAX, |a, b| Ok(a.min(b)))?;
    Ok(BigUint::from(best))
}

/// Repeatedly delete a vertex of smallest current degree (ties: lowest index)
/// while that degree is below the ORIGINAL edge density of `g`.
///
/// The survivors induce a nonempty subgraph with minimum degree at least
/// `|E|/|V|` of the input.
pub fn prune_to_density_core(g: &Graph) -> Result<InducedSubgraph> {
    let n = g.vertex_count();
    let edges = g.edge_count();
    if edges == 0 {
        return Err(Error::invalid(
            "pruning needs a graph with at least one edge",
        ));
    }
    // d < |E|/|V|  <=>  d*|V| < |E|
    let below = |d: usize| d * n < edges;
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut alive = FixedBitSet::with_capacity(n);
    alive.insert_range(..);
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = degree
        .iter()
        .enumerate()
        .map(|(v, &d)| Reverse((d, v)))
        .collect();
    while let Some(Reverse((d, v))) = heap.pop() {
        if !alive.contains(v) || d != degree[v] {
            continue;
        }
        if !below(d) {
            break;
        }
        alive.set(v, false);
        for u in g.neighbors(v) {
            if alive.contains(u) {
                degree[u] -= 1;
                heap.push(Reverse((degree[u], u)));
            }
        }
    }
    debug_assert!(!alive.is_clear());
    Ok(InducedSubgraph { members: alive })
}
