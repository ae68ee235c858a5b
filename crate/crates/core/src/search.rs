//! Kernel-and-shell search for the matches that contain one updated edge.
//!
//! Each `(query edge, orientation)` that fits the data edge seeds a partial
//! match. Kernel vertices are then extended one at a time by backtracking; once
//! the kernel is complete, every shell vertex has all its neighbors assigned
//! and the remaining matches are an injective product of shell candidate sets.

use std::time::Instant;

use serde::Serialize;

use crate::graph::{LabeledGraph, VertexId};
use crate::index::{CaligIndex, NodeId};
use crate::plan::{edge_key, KernelShellPlan, PlanMap};

const UNASSIGNED: VertexId = VertexId::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SearchStrategy {
    /// Backtrack over kernel vertices, join shell candidates.
    #[default]
    KernelShell,
    /// Backtrack over every vertex in kernel-then-shell order (`-KSS`).
    OneByOne,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchConfig {
    pub strategy: SearchStrategy,
    pub prune_ahead: bool,
    /// Count matches without materializing them.
    pub count_only: bool,
    /// Stop after this many materialized matches.
    pub max_matches: Option<u64>,
    #[serde(skip)]
    pub deadline: Option<Instant>,
    /// Test hook: the shell join silently loses its last combination.
    #[doc(hidden)]
    #[serde(skip)]
    pub inject_join_fault: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: SearchStrategy::KernelShell,
            prune_ahead: true,
            count_only: false,
            max_matches: None,
            deadline: None,
            inject_join_fault: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchCounters {
    /// Candidate assignments to backtracked vertices.
    pub backtrackings: u64,
    pub matches_emitted: u64,
    pub timed_out: bool,
    pub truncated: bool,
}

impl SearchCounters {
    pub fn absorb(&mut self, other: &SearchCounters) {
        self.backtrackings += other.backtrackings;
        self.matches_emitted += other.matches_emitted;
        self.timed_out |= other.timed_out;
        self.truncated |= other.truncated;
    }
}

/// Matches found for one update. Vectors are indexed by query vertex.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchSet {
    pub matches: Vec<Vec<VertexId>>,
    pub count: u64,
    /// False when the search timed out or hit the match limit.
    pub complete: bool,
}

/// Query-to-data assignment under construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialMatch {
    assignment: Vec<VertexId>,
    used: Vec<VertexId>,
}

impl PartialMatch {
    pub fn new(query_vertices: usize) -> Self {
        PartialMatch {
            assignment: vec![UNASSIGNED; query_vertices],
            used: Vec::new(),
        }
    }

    pub fn get(&self, u: VertexId) -> Option<VertexId> {
        let v = self.assignment[u as usize];
        (v != UNASSIGNED).then_some(v)
    }

    pub fn is_used(&self, v: VertexId) -> bool {
        self.used.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }

    pub fn assign(&mut self, u: VertexId, v: VertexId) {
        debug_assert!(self.get(u).is_none() && !self.is_used(v));
        self.assignment[u as usize] = v;
        self.used.push(v);
    }

    /// Undoes the most recent assignment, which must be to `u`.
    pub fn unassign(&mut self, u: VertexId) {
        let v = self.assignment[u as usize];
        debug_assert_eq!(self.used.last(), Some(&v));
        self.used.pop();
        self.assignment[u as usize] = UNASSIGNED;
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.assignment
    }
}

/// Candidates of `u` given the assigned neighbors in `m`: data vertices that
/// are ON for `u`, adjacent to every assigned neighbor's image, and unused.
pub fn generate_candidates(
    u: VertexId,
    m: &PartialMatch,
    query: &LabeledGraph,
    idx: &CaligIndex,
) -> Vec<VertexId> {
    let mut anchors: Vec<NodeId> = query
        .neighbors(u)
        .iter()
        .filter_map(|&w| m.get(w).map(|v| idx.node(w, v).expect("assigned pair is a node")))
        .collect();
    debug_assert!(!anchors.is_empty(), "query vertex {u} has no assigned neighbor");
    if anchors.is_empty() {
        return Vec::new();
    }
    anchors.sort_by_key(|&n| idx.in_neighbors(n).len());
    let mut cands: Vec<VertexId> = idx
        .on_in_neighbors_for(anchors[0], u)
        .filter(|&v| !m.is_used(v))
        .collect();
    cands.sort_unstable();
    for &anchor in &anchors[1..] {
        if cands.is_empty() {
            break;
        }
        let mut other: Vec<VertexId> = idx.on_in_neighbors_for(anchor, u).collect();
        other.sort_unstable();
        cands.retain(|v| other.binary_search(v).is_ok());
    }
    cands
}

/// Number of ways to pick pairwise distinct vertices, one from each list.
fn count_distinct_picks(lists: &[&[VertexId]]) -> u64 {
    fn go(lists: &[&[VertexId]], i: usize, picked: &mut Vec<VertexId>) -> u64 {
        if i == lists.len() {
            return 1;
        }
        let mut total = 0u64;
        for &v in lists[i] {
            if !picked.contains(&v) {
                picked.push(v);
                total = total.saturating_add(go(lists, i + 1, picked));
                picked.pop();
            }
        }
        total
    }
    go(lists, 0, &mut Vec::with_capacity(lists.len()))
}

/// Cardinality of the injective join over shell candidate sets, given the
/// shell vertices' labels.
pub fn join_count(labels: &[u32], cands: &[Vec<VertexId>]) -> u64 {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    let mut total = 1u64;
    // vertices with different labels can never collide
    for group in order.chunk_by(|&a, &b| labels[a] == labels[b]) {
        let lists: Vec<&[VertexId]> = group.iter().map(|&i| cands[i].as_slice()).collect();
        let n = if lists.len() == 1 {
            lists[0].len() as u64
        } else {
            count_distinct_picks(&lists)
        };
        total = total.saturating_mul(n);
        if total == 0 {
            break;
        }
    }
    total
}

/// Emits every injective selection of one candidate per shell vertex, in
/// lexicographic order of shell positions. `emit` returns false to stop.
pub fn join_shell(
    m: &mut PartialMatch,
    shell: &[VertexId],
    cands: &[Vec<VertexId>],
    distinct_labels: bool,
    emit: &mut dyn FnMut(&PartialMatch) -> bool,
) -> bool {
    fn go(
        m: &mut PartialMatch,
        shell: &[VertexId],
        cands: &[Vec<VertexId>],
        i: usize,
        check: bool,
        emit: &mut dyn FnMut(&PartialMatch) -> bool,
    ) -> bool {
        if i == shell.len() {
            return emit(m);
        }
        for &v in &cands[i] {
            if check && m.is_used(v) {
                continue;
            }
            m.assign(shell[i], v);
            let go_on = go(m, shell, cands, i + 1, check, emit);
            m.unassign(shell[i]);
            if !go_on {
                return false;
            }
        }
        true
    }
    go(m, shell, cands, 0, !distinct_labels, emit)
}

struct Searcher<'a> {
    idx: &'a CaligIndex,
    query: &'a LabeledGraph,
    order: Vec<VertexId>,
    shell: &'a [VertexId],
    shell_labels: Vec<u32>,
    shell_distinct: bool,
    config: SearchConfig,
    counters: &'a mut SearchCounters,
    out: &'a mut MatchSet,
    stop: bool,
}

impl Searcher<'_> {
    fn halted(&mut self) -> bool {
        if !self.stop {
            if let Some(deadline) = self.config.deadline {
                if Instant::now() >= deadline {
                    self.counters.timed_out = true;
                    self.stop = true;
                }
            }
        }
        self.stop
    }

    fn prune_ahead(&self, m: &PartialMatch) -> bool {
        self.shell.iter().all(|&s| {
            let ready = self.query.neighbors(s).iter().all(|&w| m.get(w).is_some());
            !ready || !generate_candidates(s, m, self.query, self.idx).is_empty()
        })
    }

    fn record(&mut self, full: &[VertexId]) -> bool {
        self.counters.matches_emitted += 1;
        self.out.count += 1;
        if !self.config.count_only {
            if let Some(limit) = self.config.max_matches {
                if self.out.matches.len() as u64 >= limit {
                    self.counters.truncated = true;
                    self.stop = true;
                    return false;
                }
            }
            self.out.matches.push(full.to_vec());
        }
        true
    }

    fn finish(&mut self, m: &mut PartialMatch) {
        if self.shell.is_empty() {
            self.record(m.as_slice());
            return;
        }
        let cands: Vec<Vec<VertexId>> = self
            .shell
            .iter()
            .map(|&s| generate_candidates(s, m, self.query, self.idx))
            .collect();
        if cands.iter().any(Vec::is_empty) {
            return;
        }
        if self.config.count_only {
            let mut n = join_count(&self.shell_labels, &cands);
            if self.config.inject_join_fault {
                n = n.saturating_sub(1);
            }
            self.counters.matches_emitted += n;
            self.out.count += n;
            return;
        }
        let mut joined: Vec<Vec<VertexId>> = Vec::new();
        let shell = self.shell;
        join_shell(m, shell, &cands, self.shell_distinct, &mut |full| {
            joined.push(full.as_slice().to_vec());
            true
        });
        if self.config.inject_join_fault {
            joined.pop();
        }
        for full in joined {
            if !self.record(&full) {
                return;
            }
        }
    }

    fn recurse(&mut self, m: &mut PartialMatch, depth: usize) {
        if self.halted() {
            return;
        }
        if self.config.prune_ahead && !self.prune_ahead(m) {
            return;
        }
        if depth == self.order.len() {
            self.finish(m);
            return;
        }
        let u = self.order[depth];
        for v in generate_candidates(u, m, self.query, self.idx) {
            self.counters.backtrackings += 1;
            m.assign(u, v);
            self.recurse(m, depth + 1);
            m.unassign(u);
            if self.stop {
                return;
            }
        }
    }
}

/// Runs the kernel-and-shell search from a seeded partial match.
pub fn kss_recurse(
    m: &mut PartialMatch,
    plan: &KernelShellPlan,
    idx: &CaligIndex,
    config: SearchConfig,
    counters: &mut SearchCounters,
    out: &mut MatchSet,
) {
    let query = idx.query();
    let (order, shell): (Vec<VertexId>, &[VertexId]) = match config.strategy {
        SearchStrategy::KernelShell => (plan.kernel.clone(), &plan.shell),
        SearchStrategy::OneByOne => {
            let mut all = plan.kernel.clone();
            all.extend_from_slice(&plan.shell);
            (all, &[])
        }
    };
    let shell_labels: Vec<u32> = shell.iter().map(|&s| query.label(s)).collect();
    let mut sorted = shell_labels.clone();
    sorted.sort_unstable();
    sorted.dedup();
    let shell_distinct = sorted.len() == shell_labels.len();
    let depth = order.iter().take_while(|&&u| m.get(u).is_some()).count();
    let mut searcher = Searcher {
        idx,
        query,
        order,
        shell,
        shell_labels,
        shell_distinct,
        config,
        counters,
        out,
        stop: false,
    };
    searcher.recurse(m, depth);
}

/// All matches containing the data edge `(v1, v2)` under the current index.
/// For an addition call after the index update, for a deletion before it.
pub fn find_incremental_matches(
    idx: &CaligIndex,
    v1: VertexId,
    v2: VertexId,
    plans: &PlanMap,
    config: SearchConfig,
    counters: &mut SearchCounters,
) -> MatchSet {
    let query = idx.query();
    let mut out = MatchSet {
        complete: true,
        ..Default::default()
    };
    'seeds: for u1 in query.vertices() {
        let Some(a) = idx.node(u1, v1) else { continue };
        if idx.state_of(a) != crate::index::LightState::On {
            continue;
        }
        for &u2 in query.neighbors(u1) {
            let Some(b) = idx.node(u2, v2) else { continue };
            if idx.state_of(b) != crate::index::LightState::On || !idx.in_neighbors(a).contains(&b) {
                continue;
            }
            let plan = &plans[&edge_key(u1, u2)];
            let mut m = PartialMatch::new(query.vertex_count());
            m.assign(u1, v1);
            m.assign(u2, v2);
            let mut local = SearchCounters::default();
            kss_recurse(&mut m, plan, idx, config, &mut local, &mut out);
            counters.absorb(&local);
            if local.timed_out || local.truncated {
                out.complete = false;
                break 'seeds;
            }
        }
    }
    out.matches.sort_unstable();
    out.matches.dedup();
    if !config.count_only {
        out.count = out.matches.len() as u64;
    }
    out
}
