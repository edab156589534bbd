//! Domatic partitions and the subgraph domatic partition (SubDP) problem.
//!
//! Classes are numbered `1..=M` at every public surface.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tfgraph::{prune_to_density_core, Graph, InducedSubgraph, TransitionFreeGraph};
use crate::word::{BitWord, ForbiddenPair};

/// Largest member count handed to [`domatic_number_exact`].
pub const EXACT_DOMATIC_CAP: usize = 24;
/// Largest vertex count handed to [`subdp_exact`].
pub const EXACT_SUBDP_CAP: usize = 20;
/// Repair passes per class count in [`subdp_heuristic`].
pub const REPAIR_PASSES: usize = 200;
/// Candidate movers examined per uncovered (vertex, class) pair.
const REPAIR_CANDIDATES: usize = 48;
/// Independent colorings tried per class count.
const RESTARTS: usize = 2;

/// An induced subgraph plus a class for each of its vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomaticPartition {
    subgraph: InducedSubgraph,
    class_count: usize,
    // 0-based class per vertex of the parent graph; None outside the subgraph.
    assignment: Vec<Option<u32>>,
}

impl DomaticPartition {
    /// Build from `(vertex, class)` pairs with classes in `1..=class_count`.
    pub fn new(
        vertex_count: usize,
        class_count: usize,
        assignment: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::invalid("a partition needs at least one class"));
        }
        let mut slots = vec![None; vertex_count];
        let mut members = FixedBitSet::with_capacity(vertex_count);
        for (v, c) in assignment {
            if v >= vertex_count {
                return Err(Error::invalid(format!(
                    "vertex {v} outside {vertex_count} vertices"
                )));
            }
            if c == 0 || c > class_count {
                return Err(Error::invalid(format!(
                    "class {c} of vertex {v} outside 1..={class_count}"
                )));
            }
            if slots[v].is_some() {
                return Err(Error::invalid(format!("vertex {v} assigned twice")));
            }
            slots[v] = Some((c - 1) as u32);
            members.insert(v);
        }
        Ok(DomaticPartition {
            subgraph: InducedSubgraph::from_bitset(members),
            class_count,
            assignment: slots,
        })
    }

    /// Class `i+1` is `classes[i]`.
    pub fn from_classes(vertex_count: usize, classes: &[Vec<usize>]) -> Result<Self> {
        let pairs = classes
            .iter()
            .enumerate()
            .flat_map(|(i, class)| class.iter().map(move |&v| (v, i + 1)));
        DomaticPartition::new(vertex_count, classes.len(), pairs)
    }

    fn from_local(vertex_count: usize, class_count: usize, verts: &[usize], local: &[u32]) -> Self {
        let mut slots = vec![None; vertex_count];
        let mut members = FixedBitSet::with_capacity(vertex_count);
        for (&v, &c) in verts.iter().zip(local) {
            slots[v] = Some(c);
            members.insert(v);
        }
        DomaticPartition {
            subgraph: InducedSubgraph::from_bitset(members),
            class_count,
            assignment: slots,
        }
    }

    pub fn subgraph(&self) -> &InducedSubgraph {
        &self.subgraph
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn vertex_count(&self) -> usize {
        self.assignment.len()
    }

    /// Class of `v` in `1..=M`, or `None` outside the subgraph.
    pub fn class_of(&self, v: usize) -> Option<usize> {
        self.assignment
            .get(v)
            .copied()
            .flatten()
            .map(|c| c as usize + 1)
    }

    pub fn class_members(&self, class: usize) -> Vec<usize> {
        self.subgraph
            .members()
            .filter(|&v| self.class_of(v) == Some(class))
            .collect()
    }
}

/// Outcome of [`check_domatic_partition`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionCheck {
    Valid,
    /// `vertex` has no member of `class` in its closed neighborhood.
    Undominated {
        vertex: usize,
        class: usize,
    },
}

impl PartitionCheck {
    pub fn is_valid(&self) -> bool {
        matches!(self, PartitionCheck::Valid)
    }
}

pub fn check_domatic_partition(g: &Graph, part: &DomaticPartition) -> Result<PartitionCheck> {
    if part.vertex_count() != g.vertex_count() {
        return Err(Error::invalid(format!(
            "partition covers {} vertices, graph has {}",
            part.vertex_count(),
            g.vertex_count()
        )));
    }
    let m = part.class_count();
    let mut seen = vec![false; m];
    for v in part.subgraph().members() {
        seen.iter_mut().for_each(|s| *s = false);
        let own = part.assignment[v].expect("member has a class") as usize;
        seen[own] = true;
        for u in g.neighbors(v) {
            if let Some(c) = part.assignment[u] {
                seen[c as usize] = true;
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Ok(PartitionCheck::Undominated {
                vertex: v,
                class: c + 1,
            });
        }
    }
    Ok(PartitionCheck::Valid)
}

pub fn is_domatic_partition(g: &Graph, part: &DomaticPartition) -> Result<bool> {
    Ok(check_domatic_partition(g, part)?.is_valid())
}

/// Best partition found for a SubDP instance.
#[derive(Clone, Debug)]
pub struct SubDpResult {
    pub value: usize,
    pub partition: DomaticPartition,
    pub exact: bool,
}

impl SubDpResult {
    pub fn subgraph(&self) -> &InducedSubgraph {
        self.partition.subgraph()
    }
}

/// `log2(S) / n`: the rate of the code built from this partition.
pub fn rate_from_subdp(result: &SubDpResult, n: usize) -> f64 {
    (result.value as f64).log2() / n as f64
}

/// Closed neighborhoods of a vertex list as local bitmasks.
struct LocalGraph {
    verts: Vec<usize>,
    closed: Vec<u64>,
}

impl LocalGraph {
    fn new(g: &Graph, verts: Vec<usize>) -> Self {
        debug_assert!(verts.len() <= 64);
        let closed = verts
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                verts
                    .iter()
                    .enumerate()
                    .filter(|&(_, &u)| g.has_edge(v, u))
                    .fold(1u64 << i, |m, (j, _)| m | 1u64 << j)
            })
            .collect();
        LocalGraph { verts, closed }
    }

    fn len(&self) -> usize {
        self.verts.len()
    }

    fn min_degree(&self) -> usize {
        self.closed
            .iter()
            .map(|m| m.count_ones() as usize - 1)
            .min()
            .unwrap_or(0)
    }
}

/// Backtracking search for a partition into `k` dominating sets.
struct Search<'a> {
    lg: &'a LocalGraph,
    k: usize,
    order: Vec<usize>,
    class_mask: Vec<u64>,
    unassigned: u64,
    assign: Vec<u32>,
}

impl<'a> Search<'a> {
    fn run(lg: &'a LocalGraph, k: usize) -> Option<Vec<u32>> {
        let m = lg.len();
        if k == 0 || k > lg.min_degree() + 1 {
            return None;
        }
        let mut order: Vec<usize> = (0..m).collect();
        // descending degree, ties by index
        order.sort_by_key(|&i| (std::cmp::Reverse(lg.closed[i].count_ones()), i));
        let mut s = Search {
            lg,
            k,
            order,
            class_mask: vec![0; k],
            unassigned: if m == 64 { u64::MAX } else { (1u64 << m) - 1 },
            assign: vec![0; m],
        };
        s.place(0, 0).then_some(s.assign)
    }

    fn feasible_around(&self, v: usize) -> bool {
        // Only vertices whose closed neighborhood contains v changed.
        let mut around = self.lg.closed[v];
        while around != 0 {
            let u = around.trailing_zeros() as usize;
            around &= around - 1;
            let nb = self.lg.closed[u];
            let missing = self.class_mask.iter().filter(|&&cm| cm & nb == 0).count() as u32;
            if missing > (nb & self.unassigned).count_ones() {
                return false;
            }
        }
        true
    }

    fn place(&mut self, pos: usize, used: usize) -> bool {
        if pos == self.order.len() {
            return true;
        }
        let v = self.order[pos];
        let bit = 1u64 << v;
        self.unassigned &= !bit;
        // Classes are opened in index order to break label symmetry.
        for c in 0..self.k.min(used + 1) {
            self.class_mask[c] |= bit;
            self.assign[v] = c as u32;
            if self.feasible_around(v) && self.place(pos + 1, used.max(c + 1)) {
                return true;
            }
            self.class_mask[c] &= !bit;
        }
        self.unassigned |= bit;
        false
    }
}

/// Exact domatic number of the subgraph induced by `sub`, with a witness.
pub fn domatic_number_exact(g: &Graph, sub: &InducedSubgraph) -> Result<(usize, DomaticPartition)> {
    let verts: Vec<usize> = sub.members().collect();
    if verts.is_empty() {
        return Err(Error::invalid("domatic number of an empty vertex set"));
    }
    if verts.len() > EXACT_DOMATIC_CAP {
        return Err(Error::ResourceLimit {
            what: format!("exact domatic search over {} vertices", verts.len()),
            cap: EXACT_DOMATIC_CAP,
            suggestion: "use subdp_heuristic instead".into(),
        });
    }
    if let Some(v) = verts.iter().find(|&&v| v >= g.vertex_count()) {
        return Err(Error::invalid(format!("member {v} outside the graph")));
    }
    let lg = LocalGraph::new(g, verts);
    let (best, assign) = best_partition(&lg, 1).expect("one class always works");
    let part = DomaticPartition::from_local(g.vertex_count(), best, &lg.verts, &assign);
    Ok((best, part))
}

/// Largest `k > floor` admitting a partition, or None when even `floor + 1`
/// fails. A `k`-partition exists for every `k` below a feasible one (merge
/// classes), so the search climbs until the first failure.
fn best_partition(lg: &LocalGraph, floor: usize) -> Option<(usize, Vec<u32>)> {
    let mut found = None;
    let mut k = floor;
    if floor == 1 {
        found = Some((1, vec![0; lg.len()]));
    }
    while let Some(assign) = Search::run(lg, k + 1) {
        k += 1;
        found = Some((k, assign));
    }
    found.filter(|(k, _)| *k > floor || floor == 1)
}

/// Exact SubDP number: the best domatic number over all induced subgraphs.
///
/// Induced subgraphs suffice since deleting edges never raises the domatic
/// number. Subsets are visited in increasing bitmask order, so the witness is
/// the first subset reaching the optimum.
pub fn subdp_exact(g: &Graph) -> Result<SubDpResult> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::invalid("SubDP of a graph without vertices"));
    }
    if n > EXACT_SUBDP_CAP {
        return Err(Error::ResourceLimit {
            what: format!("exact SubDP over {n} vertices"),
            cap: EXACT_SUBDP_CAP,
            suggestion: "use subdp_heuristic instead".into(),
        });
    }
    let open: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).fold(0u32, |m, u| m | 1 << u))
        .collect();

    let mut best = 1usize;
    let mut witness = DomaticPartition::new(n, 1, [(0, 1)])?;
    for mask in 1u32..(1u32 << n) {
        if (mask.count_ones() as usize) <= best {
            continue;
        }
        // degree bound: D <= delta + 1
        let mut delta = u32::MAX;
        let mut rest = mask;
        while rest != 0 && delta as usize >= best {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            delta = delta.min((open[v] & mask).count_ones());
        }
        if (delta as usize) < best {
            continue;
        }
        let verts: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        let lg = LocalGraph::new(g, verts);
        if let Some((k, assign)) = best_partition(&lg, best) {
            if k > best {
                best = k;
                witness = DomaticPartition::from_local(n, k, &lg.verts, &assign);
            }
        }
    }
    Ok(SubDpResult {
        value: best,
        partition: witness,
        exact: true,
    })
}

/// Seeded heuristic: prune, then try class counts from the degree bound
/// downward with random balanced colorings, repair passes and greedy
/// completion. The result is always a valid domatic partition of some induced
/// subgraph; only optimality is heuristic.
///
/// The search starts at `c + 1` where `c` is the largest `c` with a nonempty
/// `c`-core; this is at least `delta + 1` of the density core. An attempt at
/// `M` classes runs on the `(M-1)`-core, since every subgraph with domatic
/// number `M` has minimum degree `M - 1` and so lies inside it. With
/// `target`, the search starts at no more than `target`.
pub fn subdp_heuristic(g: &Graph, target: Option<usize>, seed: u64) -> Result<SubDpResult> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::invalid("SubDP of a graph without vertices"));
    }
    let single = || SubDpResult {
        value: 1,
        partition: DomaticPartition::new(n, 1, [(0, 1)]).expect("vertex 0 exists"),
        exact: false,
    };
    if g.edge_count() == 0 {
        return Ok(single());
    }
    let density_core = prune_to_density_core(g)?;
    let core = core_numbers(g);
    let degeneracy = core.iter().copied().max().unwrap_or(0);
    debug_assert!(degeneracy >= density_core.min_degree(g));

    let mut upper = degeneracy + 1;
    if let Some(t) = target {
        upper = upper.min(t.max(1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attempt = |m: usize, rng: &mut ChaCha8Rng| -> Option<Vec<(usize, usize)>> {
        let verts: Vec<usize> = (0..n).filter(|&v| core[v] + 1 >= m).collect();
        let local = HeuristicGraph::new(g, &verts);
        (0..RESTARTS)
            .find_map(|_| local.attempt(m, rng))
            .map(|classes| {
                classes
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| c.map(|c| (verts[i], c as usize + 1)))
                    .collect()
            })
    };

    // Greedy disjoint dominating sets give a cheap baseline; local search
    // then climbs from it (galloping, then bisecting below the first failure).
    let base_verts: Vec<usize> = density_core.members().collect();
    let (mut lo, mut lo_assign) = {
        let local = HeuristicGraph::new(g, &base_verts);
        let classes = local.greedy_classes();
        let m = classes
            .iter()
            .map(|&c| c as usize + 1)
            .max()
            .unwrap_or(1)
            .min(upper);
        let pairs = base_verts
            .iter()
            .zip(&classes)
            .map(|(&v, &c)| (v, (c as usize).min(m - 1) + 1))
            .collect::<Vec<_>>();
        (m, pairs)
    };
    let mut hi = upper + 1;
    while lo + 1 < hi {
        let step = (lo / 20).max(1);
        let m = if hi == upper + 1 {
            (lo + step).min(upper)
        } else {
            lo + (hi - lo) / 2
        };
        match attempt(m, &mut rng) {
            Some(a) => {
                lo = m;
                lo_assign = a;
            }
            None => hi = m,
        }
    }

    let partition = DomaticPartition::new(n, lo, lo_assign)?;
    debug_assert!(is_domatic_partition(g, &partition)?);
    Ok(SubDpResult {
        value: lo,
        partition,
        exact: false,
    })
}

/// Core number of every vertex (largest `c` such that the vertex survives in
/// the `c`-core), by repeated removal of a minimum-degree vertex.
pub fn core_numbers(g: &Graph) -> Vec<usize> {
    let n = g.vertex_count();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut core = vec![0; n];
    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(usize, usize)>> = degree
        .iter()
        .enumerate()
        .map(|(v, &d)| std::cmp::Reverse((d, v)))
        .collect();
    let mut level = 0;
    while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
        if removed[v] || d != degree[v] {
            continue;
        }
        level = level.max(d);
        core[v] = level;
        removed[v] = true;
        for u in g.neighbors(v) {
            if !removed[u] {
                degree[u] -= 1;
                heap.push(std::cmp::Reverse((degree[u], u)));
            }
        }
    }
    core
}

struct HeuristicGraph {
    nbrs: Vec<Vec<u32>>,
}

impl HeuristicGraph {
    fn new(g: &Graph, verts: &[usize]) -> Self {
        let mut index = vec![u32::MAX; g.vertex_count()];
        for (i, &v) in verts.iter().enumerate() {
            index[v] = i as u32;
        }
        let nbrs = verts
            .iter()
            .map(|&v| {
                g.neighbors(v)
                    .map(|u| index[u])
                    .filter(|&i| i != u32::MAX)
                    .collect()
            })
            .collect();
        HeuristicGraph { nbrs }
    }

    /// Classes from repeatedly extracting a greedy dominating set of the
    /// whole vertex set out of the still unused vertices. Leftovers join
    /// class 0, which keeps every class dominating.
    fn greedy_classes(&self) -> Vec<u32> {
        let size = self.nbrs.len();
        let mut class = vec![u32::MAX; size];
        let mut next = 0u32;
        loop {
            let mut undominated = vec![true; size];
            let mut remaining = size;
            // gain[w] = undominated vertices in N[w]; only unused w may be picked
            let mut gain: Vec<usize> = (0..size).map(|w| self.nbrs[w].len() + 1).collect();
            let mut picked = Vec::new();
            while remaining > 0 {
                let best = (0..size)
                    .filter(|&w| class[w] == u32::MAX && gain[w] > 0)
                    .max_by_key(|&w| (gain[w], std::cmp::Reverse(w)));
                let Some(w) = best else { break };
                class[w] = next;
                picked.push(w);
                for u in std::iter::once(w).chain(self.nbrs[w].iter().map(|&u| u as usize)) {
                    if undominated[u] {
                        undominated[u] = false;
                        remaining -= 1;
                        gain[u] -= 1;
                        for &x in &self.nbrs[u] {
                            gain[x as usize] -= 1;
                        }
                    }
                }
            }
            if remaining > 0 {
                for w in picked {
                    class[w] = u32::MAX;
                }
                break;
            }
            next += 1;
        }
        for c in class.iter_mut().filter(|c| **c == u32::MAX) {
            *c = 0;
        }
        class
    }

    /// One attempt at `m` classes; returns the class of every surviving vertex.
    fn attempt(&self, m: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Option<u32>>> {
        let size = self.nbrs.len();
        if size < m {
            return None;
        }
        let mut order: Vec<usize> = (0..size).collect();
        order.shuffle(rng);
        let mut class = vec![0u32; size];
        for (i, &v) in order.iter().enumerate() {
            class[v] = (i % m) as u32;
        }
        let mut cover = vec![0u32; size * m];
        for v in 0..size {
            cover[v * m + class[v] as usize] += 1;
            for &u in &self.nbrs[v] {
                cover[v * m + class[u as usize] as usize] += 1;
            }
        }

        let mut uncovered: Vec<(usize, usize)> = Vec::new();
        let mut candidates: Vec<usize> = Vec::new();
        for _ in 0..REPAIR_PASSES {
            uncovered.clear();
            for v in 0..size {
                for c in 0..m {
                    if cover[v * m + c] == 0 {
                        uncovered.push((v, c));
                    }
                }
            }
            if uncovered.is_empty() {
                return Some(class.into_iter().map(Some).collect());
            }
            uncovered.shuffle(rng);
            for &(v, c) in &uncovered {
                if cover[v * m + c] != 0 {
                    continue;
                }
                // Move a closed neighbor of v into class c, preferring movers
                // whose old class stays covered around them.
                candidates.clear();
                candidates.push(v);
                candidates.extend(self.nbrs[v].iter().map(|&u| u as usize));
                if candidates.len() > REPAIR_CANDIDATES {
                    candidates.partial_shuffle(rng, REPAIR_CANDIDATES);
                    candidates.truncate(REPAIR_CANDIDATES);
                }
                let mut chosen = candidates[0];
                let mut chosen_score = i64::MIN;
                for &w in &candidates {
                    let old = class[w] as usize;
                    let mut score = 0i64;
                    let mut touch = |u: usize| {
                        if cover[u * m + old] == 1 {
                            score -= 1;
                        }
                        if cover[u * m + c] == 0 {
                            score += 1;
                        }
                    };
                    touch(w);
                    for &u in &self.nbrs[w] {
                        touch(u as usize);
                    }
                    // small random tie-break
                    let score = score * 8 + rng.gen_range(0..8);
                    if score > chosen_score {
                        chosen_score = score;
                        chosen = w;
                    }
                }
                let old = class[chosen] as usize;
                class[chosen] = c as u32;
                cover[chosen * m + old] -= 1;
                cover[chosen * m + c] += 1;
                for &u in &self.nbrs[chosen] {
                    cover[u as usize * m + old] -= 1;
                    cover[u as usize * m + c] += 1;
                }
            }
        }

        // Greedy completion: drop vertices that still miss a class until the
        // survivors are all dominated.
        let mut alive = vec![true; size];
        let mut queue: Vec<usize> = (0..size)
            .filter(|&v| (0..m).any(|c| cover[v * m + c] == 0))
            .collect();
        while let Some(x) = queue.pop() {
            if !alive[x] {
                continue;
            }
            alive[x] = false;
            let cx = class[x] as usize;
            for &u in &self.nbrs[x] {
                let u = u as usize;
                if alive[u] {
                    cover[u * m + cx] -= 1;
                    if cover[u * m + cx] == 0 {
                        queue.push(u);
                    }
                }
            }
        }
        if !alive.iter().any(|&a| a) {
            return None;
        }
        Some((0..size).map(|v| alive[v].then_some(class[v])).collect())
    }
}

/// JSON form of a partition of a transition free graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub n: usize,
    pub p: BitWord,
    pub q: BitWord,
    pub class_count: usize,
    pub exact: bool,
    pub members: Vec<BitWord>,
    pub assignment: BTreeMap<BitWord, usize>,
}

impl PartitionJson {
    pub fn from_result(tfg: &TransitionFreeGraph, result: &SubDpResult) -> Self {
        let part = &result.partition;
        let members: Vec<BitWord> = part.subgraph().members().map(|v| tfg.word(v)).collect();
        let assignment = part
            .subgraph()
            .members()
            .map(|v| (tfg.word(v), part.class_of(v).expect("member")))
            .collect();
        PartitionJson {
            n: tfg.n(),
            p: tfg.fp().p(),
            q: tfg.fp().q(),
            class_count: part.class_count(),
            exact: result.exact,
            members,
            assignment,
        }
    }

    pub fn forbidden_pair(&self) -> Result<ForbiddenPair> {
        ForbiddenPair::new(self.p, self.q)
    }

    /// Rebuild the partition against `tfg` (which must match `n`, `p`, `q`).
    pub fn to_result(&self, tfg: &TransitionFreeGraph) -> Result<SubDpResult> {
        if self.n != tfg.n() || self.forbidden_pair()? != *tfg.fp() {
            return Err(Error::invalid("partition file does not match the graph"));
        }
        let mut pairs = Vec::with_capacity(self.assignment.len());
        for (w, &c) in &self.assignment {
            pairs.push((tfg.vertex(w)?, c));
        }
        if self.members.len() != pairs.len()
            || self
                .members
                .iter()
                .any(|w| !self.assignment.contains_key(w))
        {
            return Err(Error::invalid("members and assignment disagree"));
        }
        let partition = DomaticPartition::new(tfg.graph().vertex_count(), self.class_count, pairs)?;
        Ok(SubDpResult {
            value: self.class_count,
            partition,
            exact: self.exact,
        })
    }
}
