//! Candidate lighting graph.
//!
//! Every label-compatible `(query vertex, data vertex)` pair is a node with an
//! ON/OFF state. Arcs run between nodes whose query vertices and data vertices
//! are both adjacent. A node is ON while the bigraph built from its
//! in-neighbors saturates the query vertex's neighborhood. State changes are
//! pushed along arcs: OFF-propagation follows out-arcs and removes them,
//! ON-propagation follows in-arcs and restores the reverse direction.
//!
//! Invariant at rest: an ON node's in-neighbors are exactly its ON neighbors in
//! the pair graph, so the in-arc lists double as adjacency-verified candidate
//! lists for the search.

use std::fmt::Write as _;

use serde::Serialize;

use crate::graph::{Label, LabeledGraph, QueryGraph, VertexId};
use crate::matching::{self, Bigraph};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum LightState {
    On,
    Off,
}

impl LightState {
    pub fn as_str(self) -> &'static str {
        match self {
            LightState::On => "ON",
            LightState::Off => "OFF",
        }
    }
}

/// Rule deciding whether a node may stay ON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum StateRule {
    /// The bigraph has a matching saturating the query-side neighbors.
    #[default]
    Injective,
    /// Every query-side neighbor has at least one edge (`-InjM` ablation).
    NeighborOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct IndexOptions {
    pub rule: StateRule,
    /// Keep every node ON and skip all state maintenance (`-NState` ablation).
    pub frozen_states: bool,
    /// Reuse the last saturating matching while all its arcs survive (`+CaIM`).
    pub cache_matching: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateChange {
    pub query: VertexId,
    pub data: VertexId,
    pub from: LightState,
    pub to: LightState,
}

/// State flips of one maintenance call, in flip order.
pub type ChangeLog = Vec<StateChange>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub state_checks: u64,
    pub cache_hits: u64,
}

#[derive(Debug, Clone)]
struct Node {
    query: VertexId,
    data: VertexId,
    state: LightState,
    in_arcs: Vec<NodeId>,
    out_arcs: Vec<NodeId>,
    // in-neighbor matched to each query-side neighbor, by position
    cached: Option<Vec<NodeId>>,
}

#[derive(Debug, Clone)]
pub struct CaligIndex {
    query: LabeledGraph,
    data_labels: Vec<Label>,
    nodes: Vec<Node>,
    // per data vertex: (query vertex, node), sorted by query vertex
    by_data: Vec<Vec<(VertexId, NodeId)>>,
    options: IndexOptions,
    stats: IndexStats,
}

impl CaligIndex {
    /// Builds the index for `query` over `data` and computes the initial states.
    pub fn construct(query: &QueryGraph, data: &LabeledGraph, options: IndexOptions) -> Self {
        let mut index = Self::build(query, data, options);
        index.initialize();
        index
    }

    /// Builds nodes and arcs with every state ON, without running initialization.
    pub fn build(query: &QueryGraph, data: &LabeledGraph, options: IndexOptions) -> Self {
        let label_count = query
            .labels()
            .iter()
            .chain(data.labels())
            .max()
            .map_or(0, |&l| l as usize + 1);
        let mut data_by_label: Vec<Vec<VertexId>> = vec![Vec::new(); label_count];
        for v in data.vertices() {
            data_by_label[data.label(v) as usize].push(v);
        }

        let mut nodes = Vec::new();
        let mut by_data: Vec<Vec<(VertexId, NodeId)>> = vec![Vec::new(); data.vertex_count()];
        for u in query.vertices() {
            for &v in &data_by_label[query.label(u) as usize] {
                let id = nodes.len() as NodeId;
                nodes.push(Node {
                    query: u,
                    data: v,
                    state: LightState::On,
                    in_arcs: Vec::new(),
                    out_arcs: Vec::new(),
                    cached: None,
                });
                by_data[v as usize].push((u, id));
            }
        }

        let mut index = CaligIndex {
            query: query.graph().clone(),
            data_labels: data.labels().to_vec(),
            nodes,
            by_data,
            options,
            stats: IndexStats::default(),
        };

        for id in 0..index.nodes.len() as NodeId {
            let (u, v) = index.pair(id);
            for &nu in index.query.neighbors(u) {
                for &nv in data.neighbors(v) {
                    if let Some(src) = index.node(nu, nv) {
                        index.nodes[id as usize].in_arcs.push(src);
                        index.nodes[src as usize].out_arcs.push(id);
                    }
                }
            }
        }
        index
    }

    pub fn options(&self) -> IndexOptions {
        self.options
    }

    pub fn stats(&self) -> IndexStats {
        self.stats
    }

    pub fn query(&self) -> &LabeledGraph {
        &self.query
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.nodes.iter().map(|n| n.in_arcs.len()).sum()
    }

    pub fn on_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.state == LightState::On).count()
    }

    pub fn node(&self, u: VertexId, v: VertexId) -> Option<NodeId> {
        let list = self.by_data.get(v as usize)?;
        list.iter().find(|&&(qu, _)| qu == u).map(|&(_, id)| id)
    }

    pub fn pair(&self, id: NodeId) -> (VertexId, VertexId) {
        let n = &self.nodes[id as usize];
        (n.query, n.data)
    }

    pub fn state_of(&self, id: NodeId) -> LightState {
        self.nodes[id as usize].state
    }

    pub fn state(&self, u: VertexId, v: VertexId) -> Option<LightState> {
        self.node(u, v).map(|id| self.state_of(id))
    }

    pub fn is_on(&self, u: VertexId, v: VertexId) -> bool {
        self.state(u, v) == Some(LightState::On)
    }

    pub fn in_neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id as usize].in_arcs
    }

    pub fn out_neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id as usize].out_arcs
    }

    pub fn has_arc(&self, from: NodeId, to: NodeId) -> bool {
        self.nodes[to as usize].in_arcs.contains(&from)
    }

    /// Data vertices `v` such that `(u, v)` is ON.
    pub fn candidates(&self, u: VertexId) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self
            .nodes
            .iter()
            .filter(|n| n.query == u && n.state == LightState::On)
            .map(|n| n.data)
            .collect();
        out.sort_unstable();
        out
    }

    /// ON in-neighbors of `id` whose query vertex is `u`, as data vertices.
    pub fn on_in_neighbors_for(&self, id: NodeId, u: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.nodes[id as usize].in_arcs.iter().filter_map(move |&w| {
            let n = &self.nodes[w as usize];
            (n.query == u && n.state == LightState::On).then_some(n.data)
        })
    }

    /// `((u, v), state)` for every node, sorted by pair.
    pub fn states(&self) -> Vec<((VertexId, VertexId), LightState)> {
        let mut out: Vec<_> = self.nodes.iter().map(|n| ((n.query, n.data), n.state)).collect();
        out.sort_unstable();
        out
    }

    /// The bigraph of a node over its current in-neighbors. Right-side vertices
    /// are the data-side neighbors that carry at least one edge.
    pub fn bigraph(&self, id: NodeId) -> Bigraph {
        let node = &self.nodes[id as usize];
        let left: Vec<VertexId> = self.query.neighbors(node.query).to_vec();
        let mut right: Vec<VertexId> = node
            .in_arcs
            .iter()
            .map(|&w| self.nodes[w as usize].data)
            .collect();
        right.sort_unstable();
        right.dedup();
        let mut b = Bigraph::new(left, right);
        for &w in &node.in_arcs {
            let n = &self.nodes[w as usize];
            let l = b.left().binary_search(&n.query).expect("arc without query edge");
            let r = b.right().binary_search(&n.data).unwrap();
            b.add_edge(l, r);
        }
        b
    }

    fn passes(&mut self, id: NodeId) -> bool {
        self.stats.state_checks += 1;
        if self.options.rule == StateRule::NeighborOnly {
            return matching::every_left_has_edge(&self.bigraph(id));
        }
        if self.options.cache_matching {
            if let Some(cached) = &self.nodes[id as usize].cached {
                let arcs = &self.nodes[id as usize].in_arcs;
                if cached.iter().all(|w| arcs.contains(w)) {
                    self.stats.cache_hits += 1;
                    return true;
                }
            }
            return self.recompute_cached(id);
        }
        matching::has_injective_matching(&self.bigraph(id))
    }

    fn recompute_cached(&mut self, id: NodeId) -> bool {
        let b = self.bigraph(id);
        let check = matching::check_saturation(&b);
        if !check.saturated() {
            self.nodes[id as usize].cached = None;
            return false;
        }
        let adj: Vec<Vec<usize>> = (0..b.left_len()).map(|l| b.edges_of(l).to_vec()).collect();
        let mates = matching::maximum_matching(&adj, b.right_len());
        let mut chosen = Vec::with_capacity(mates.len());
        for (l, r) in mates.iter().enumerate() {
            let (u, v) = (b.left()[l], b.right()[r.expect("saturated")]);
            chosen.push(self.node(u, v).unwrap());
        }
        self.nodes[id as usize].cached = Some(chosen);
        true
    }

    fn set_state(&mut self, id: NodeId, to: LightState, log: &mut ChangeLog) {
        let node = &mut self.nodes[id as usize];
        if node.state != to {
            log.push(StateChange {
                query: node.query,
                data: node.data,
                from: node.state,
                to,
            });
            node.state = to;
        }
    }

    fn add_arc(&mut self, from: NodeId, to: NodeId) -> bool {
        if self.nodes[to as usize].in_arcs.contains(&from) {
            return false;
        }
        self.nodes[to as usize].in_arcs.push(from);
        self.nodes[from as usize].out_arcs.push(to);
        true
    }

    fn remove_arc(&mut self, from: NodeId, to: NodeId) -> bool {
        let ins = &mut self.nodes[to as usize].in_arcs;
        let Some(pos) = ins.iter().position(|&w| w == from) else {
            return false;
        };
        ins.swap_remove(pos);
        let outs = &mut self.nodes[from as usize].out_arcs;
        let pos = outs.iter().position(|&w| w == to).unwrap();
        outs.swap_remove(pos);
        true
    }

    /// Turns off every node whose bigraph fails, cascading until stable.
    pub fn initialize(&mut self) -> ChangeLog {
        let mut log = ChangeLog::new();
        if self.options.frozen_states {
            return log;
        }
        for id in 0..self.nodes.len() as NodeId {
            if self.state_of(id) == LightState::On && !self.passes(id) {
                self.set_state(id, LightState::Off, &mut log);
                self.off_propagation(id, &mut log);
            }
        }
        log
    }

    /// Cascades from a node that was just turned OFF: its arcs into ON nodes
    /// are removed and those nodes re-checked.
    pub fn off_propagation(&mut self, seed: NodeId, log: &mut ChangeLog) {
        let mut stack = vec![seed];
        let mut detached = Vec::new();
        while let Some(x) = stack.pop() {
            detached.clear();
            let outs = std::mem::take(&mut self.nodes[x as usize].out_arcs);
            let mut kept = Vec::with_capacity(outs.len());
            for y in outs {
                if self.nodes[y as usize].state == LightState::On {
                    let ins = &mut self.nodes[y as usize].in_arcs;
                    let pos = ins.iter().position(|&w| w == x).unwrap();
                    ins.swap_remove(pos);
                    detached.push(y);
                } else {
                    kept.push(y);
                }
            }
            self.nodes[x as usize].out_arcs = kept;
            for &y in &detached {
                if self.state_of(y) == LightState::On && !self.passes(y) {
                    self.set_state(y, LightState::Off, log);
                    stack.push(y);
                }
            }
        }
    }

    /// Cascades from a node that was just turned ON (or is provisionally
    /// treated as ON). Every in-neighbor gets the reverse arc; OFF in-neighbors
    /// that now pass are turned ON and expanded, the rest form the stop set.
    pub fn on_propagation(&mut self, seed: NodeId, log: &mut ChangeLog) -> Vec<NodeId> {
        let mut stop = Vec::new();
        let mut stack = vec![seed];
        while let Some(x) = stack.pop() {
            let ins = self.nodes[x as usize].in_arcs.clone();
            for y in ins {
                self.add_arc(x, y);
                if self.state_of(y) == LightState::Off {
                    if self.passes(y) {
                        self.set_state(y, LightState::On, log);
                        stack.push(y);
                    } else if !stop.contains(&y) {
                        stop.push(y);
                    }
                }
            }
        }
        stop
    }

    /// (query edge orientation, data orientation) pairs whose labels fit the
    /// data edge `(v1, v2)`: yields `(u1, u2, x1, x2)` with `u1 -> x1`, `u2 -> x2`.
    fn label_matches(&self, v1: VertexId, v2: VertexId) -> Vec<(VertexId, VertexId, VertexId, VertexId)> {
        let (l1, l2) = (self.data_labels[v1 as usize], self.data_labels[v2 as usize]);
        let mut out = Vec::new();
        for u1 in self.query.vertices() {
            for &u2 in self.query.neighbors(u1) {
                let (q1, q2) = (self.query.label(u1), self.query.label(u2));
                if q1 == l1 && q2 == l2 {
                    out.push((u1, u2, v1, v2));
                }
                if q1 == l2 && q2 == l1 {
                    out.push((u1, u2, v2, v1));
                }
            }
        }
        out
    }

    /// Removes the arcs induced by the deleted data edge `(v1, v2)` and turns
    /// off whatever no longer passes. Call after the search for the deletion.
    pub fn update_for_deletion(&mut self, v1: VertexId, v2: VertexId) -> ChangeLog {
        let mut log = ChangeLog::new();
        for (u1, u2, x1, x2) in self.label_matches(v1, v2) {
            // each unordered node pair shows up twice; the second is a no-op
            let (a, b) = (self.node(u1, x1).unwrap(), self.node(u2, x2).unwrap());
            let removed = self.remove_arc(a, b) | self.remove_arc(b, a);
            if !removed || self.options.frozen_states {
                continue;
            }
            for n in [a, b] {
                if self.state_of(n) == LightState::On && !self.passes(n) {
                    self.set_state(n, LightState::Off, &mut log);
                    self.off_propagation(n, &mut log);
                }
            }
        }
        log
    }

    /// Adds the arcs induced by the new data edge `(v1, v2)` and lights up
    /// whatever it enables. Call before the search for the addition.
    pub fn update_for_addition(&mut self, v1: VertexId, v2: VertexId) -> ChangeLog {
        let mut log = ChangeLog::new();
        for (u1, u2, x1, x2) in self.label_matches(v1, v2) {
            let target = self.node(u1, x1).unwrap();
            let source = self.node(u2, x2).unwrap();
            self.add_arc(source, target);
            if self.options.frozen_states {
                continue;
            }
            if self.state_of(target) == LightState::Off && self.passes(target) {
                self.set_state(target, LightState::On, &mut log);
            }
            if self.state_of(target) == LightState::On {
                let stop = self.on_propagation(target, &mut log);
                for s in stop {
                    // a stop node may have been lit later in the same cascade
                    if self.state_of(s) == LightState::Off {
                        self.off_propagation(s, &mut log);
                    }
                }
            }
        }
        log
    }

    /// Lists broken structural invariants; empty when the index is consistent
    /// with `data` and at rest.
    pub fn invariant_violations(&self, data: &LabeledGraph) -> Vec<String> {
        let mut out = Vec::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let id = id as NodeId;
            if self.query.label(node.query) != data.label(node.data) {
                out.push(format!("label mismatch at {:?}", self.pair(id)));
            }
            for &w in &node.in_arcs {
                let (wu, wv) = self.pair(w);
                if !self.query.has_edge(wu, node.query) || !data.has_edge(wv, node.data) {
                    out.push(format!("arc {:?} -> {:?} has no edge", (wu, wv), self.pair(id)));
                }
                if !self.nodes[w as usize].out_arcs.contains(&id) {
                    out.push(format!("arc {:?} -> {:?} missing out entry", (wu, wv), self.pair(id)));
                }
                if node.state == LightState::On && self.state_of(w) == LightState::Off {
                    out.push(format!("ON {:?} has OFF in-neighbor {:?}", self.pair(id), (wu, wv)));
                }
            }
            for &w in &node.out_arcs {
                if !self.nodes[w as usize].in_arcs.contains(&id) {
                    out.push(format!("out entry {:?} -> {:?} missing in entry", self.pair(id), self.pair(w)));
                }
            }
            let mut sorted = node.in_arcs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != node.in_arcs.len() {
                out.push(format!("duplicate in-arcs at {:?}", self.pair(id)));
            }
        }
        out
    }

    /// Text dump: `mp <u> <v> <ON|OFF>` lines, then `arc <u1> <v1> <u2> <v2>`
    /// lines, each group sorted.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for ((u, v), state) in self.states() {
            writeln!(out, "mp {u} {v} {}", state.as_str()).unwrap();
        }
        let mut arcs: Vec<(VertexId, VertexId, VertexId, VertexId)> = Vec::with_capacity(self.arc_count());
        for node in &self.nodes {
            for &w in &node.in_arcs {
                let (wu, wv) = self.pair(w);
                arcs.push((wu, wv, node.query, node.data));
            }
        }
        arcs.sort_unstable();
        for (a, b, c, d) in arcs {
            writeln!(out, "arc {a} {b} {c} {d}").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LabeledGraph;

    fn q(labels: Vec<Label>, edges: &[(VertexId, VertexId)]) -> QueryGraph {
        QueryGraph::new(LabeledGraph::from_edges(labels, edges.iter().copied()).unwrap()).unwrap()
    }

    #[test]
    fn single_edge_exact_instance() {
        let query = q(vec![0, 1], &[(0, 1)]);
        let data = LabeledGraph::from_edges(vec![0, 1], [(0, 1)]).unwrap();
        let idx = CaligIndex::construct(&query, &data, IndexOptions::default());
        assert_eq!(idx.node_count(), 2);
        assert_eq!(idx.on_count(), 2);
        assert_eq!(idx.arc_count(), 2);
    }

    #[test]
    fn injectivity_matters() {
        // star with two same-label leaves cannot map onto a single-edge data graph
        let query = q(vec![0, 1, 1], &[(0, 1), (0, 2)]);
        let data = LabeledGraph::from_edges(vec![0, 1], [(0, 1)]).unwrap();
        let idx = CaligIndex::construct(&query, &data, IndexOptions::default());
        assert_eq!(idx.on_count(), 0);
        let weak = CaligIndex::construct(
            &query,
            &data,
            IndexOptions {
                rule: StateRule::NeighborOnly,
                ..Default::default()
            },
        );
        assert_eq!(weak.on_count(), 3);
    }

    #[test]
    fn missing_label_has_no_candidates() {
        let query = q(vec![0, 2], &[(0, 1)]);
        let data = LabeledGraph::from_edges(vec![0, 1], [(0, 1)]).unwrap();
        let idx = CaligIndex::construct(&query, &data, IndexOptions::default());
        assert!(idx.candidates(1).is_empty());
        assert!(idx.candidates(0).is_empty());
    }

    #[test]
    fn propagation_from_isolated_seed_is_noop() {
        let query = q(vec![0, 1], &[(0, 1)]);
        let data = LabeledGraph::from_edges(vec![0, 1, 0], [(0, 1)]).unwrap();
        let mut idx = CaligIndex::construct(&query, &data, IndexOptions::default());
        let before = idx.states();
        let seed = idx.node(0, 2).unwrap();
        let mut log = ChangeLog::new();
        idx.off_propagation(seed, &mut log);
        assert!(log.is_empty());
        assert!(idx.on_propagation(seed, &mut log).is_empty());
        assert!(log.is_empty());
        assert_eq!(idx.states(), before);
    }

    #[test]
    fn unrelated_labels_leave_index_untouched() {
        let query = q(vec![0, 1], &[(0, 1)]);
        let mut data = LabeledGraph::from_edges(vec![0, 1, 2, 2], [(0, 1)]).unwrap();
        let mut idx = CaligIndex::construct(&query, &data, IndexOptions::default());
        data.add_edge(2, 3).unwrap();
        assert!(idx.update_for_addition(2, 3).is_empty());
        data.remove_edge(2, 3).unwrap();
        assert!(idx.update_for_deletion(2, 3).is_empty());
    }

    #[test]
    fn dump_format() {
        let query = q(vec![0, 1], &[(0, 1)]);
        let data = LabeledGraph::from_edges(vec![0, 1], [(0, 1)]).unwrap();
        let idx = CaligIndex::construct(&query, &data, IndexOptions::default());
        assert_eq!(idx.dump(), "mp 0 0 ON\nmp 1 1 ON\narc 0 0 1 1\narc 1 1 0 0\n");
    }
}
