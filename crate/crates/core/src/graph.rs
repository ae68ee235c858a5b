//! Undirected vertex-labeled graphs, the text formats they are loaded from,
//! and the edge stream that mutates a data graph over time.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = u32;
pub type Label = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error on line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("query graph must have at least 2 vertices, found {0}")]
    QueryTooSmall(usize),
    #[error("query graph is not connected")]
    QueryDisconnected,
}

impl GraphError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        GraphError::Parse {
            line,
            message: message.into(),
        }
    }

    fn invalid(line: usize, message: impl Into<String>) -> Self {
        GraphError::Validation {
            line,
            message: message.into(),
        }
    }
}

/// An update that cannot be applied to the current graph.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum UpdateError {
    #[error("edge ({0}, {1}) already exists")]
    EdgeExists(VertexId, VertexId),
    #[error("edge ({0}, {1}) does not exist")]
    EdgeMissing(VertexId, VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("vertex {0} out of range")]
    OutOfRange(VertexId),
}

/// Interns label names to dense integers. Query and data graphs of one session
/// must share a table so that equal names map to equal labels.
#[derive(Debug, Clone, Default)]
pub struct LabelTable {
    names: Vec<String>,
    index: HashMap<String, Label>,
}

impl LabelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> Label {
        if let Some(&label) = self.index.get(name) {
            return label;
        }
        let label = self.names.len() as Label;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), label);
        label
    }

    pub fn name(&self, label: Label) -> Option<&str> {
        self.names.get(label as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Add,
    Delete,
}

impl OpKind {
    pub fn symbol(self) -> char {
        match self {
            OpKind::Add => '+',
            OpKind::Delete => '-',
        }
    }
}

/// One operation of an edge stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UpdateOp {
    pub kind: OpKind,
    pub src: VertexId,
    pub dst: VertexId,
}

impl UpdateOp {
    pub fn add(src: VertexId, dst: VertexId) -> Self {
        UpdateOp {
            kind: OpKind::Add,
            src,
            dst,
        }
    }

    pub fn delete(src: VertexId, dst: VertexId) -> Self {
        UpdateOp {
            kind: OpKind::Delete,
            src,
            dst,
        }
    }
}

impl fmt::Display for UpdateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.kind.symbol(), self.src, self.dst)
    }
}

/// Simple undirected graph with one label per vertex.
///
/// Vertex ids are dense (`0..vertex_count`). Every adjacency list is kept
/// sorted and duplicate free, so edge lookups are binary searches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    labels: Vec<Label>,
    adjacency: Vec<Vec<VertexId>>,
    edge_count: usize,
    // degree_histogram[d] = number of vertices with degree d
    degree_histogram: Vec<usize>,
}

impl LabeledGraph {
    /// A graph with the given vertex labels and no edges.
    pub fn new(labels: Vec<Label>) -> Self {
        let n = labels.len();
        LabeledGraph {
            labels,
            adjacency: vec![Vec::new(); n],
            edge_count: 0,
            degree_histogram: vec![n],
        }
    }

    pub fn from_edges(
        labels: Vec<Label>,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, UpdateError> {
        let mut g = LabeledGraph::new(labels);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn max_degree(&self) -> usize {
        self.degree_histogram.len() - 1
    }

    pub fn label(&self, v: VertexId) -> Label {
        self.labels[v as usize]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        0..self.vertex_count() as VertexId
    }

    pub fn has_edge(&self, a: VertexId, b: VertexId) -> bool {
        let (a, b) = (a as usize, b as usize);
        if a >= self.adjacency.len() || b >= self.adjacency.len() {
            return false;
        }
        // search the shorter list
        let (x, y) = if self.adjacency[a].len() <= self.adjacency[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.adjacency[x].binary_search(&(y as VertexId)).is_ok()
    }

    /// Edges as `(a, b)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, nbrs)| {
            let a = a as VertexId;
            nbrs.iter().copied().filter(move |&b| a < b).map(move |b| (a, b))
        })
    }

    fn check_endpoints(&self, a: VertexId, b: VertexId) -> Result<(), UpdateError> {
        let n = self.vertex_count() as VertexId;
        if a >= n {
            return Err(UpdateError::OutOfRange(a));
        }
        if b >= n {
            return Err(UpdateError::OutOfRange(b));
        }
        if a == b {
            return Err(UpdateError::SelfLoop(a));
        }
        Ok(())
    }

    fn bump_degree(&mut self, v: VertexId, up: bool) {
        let d = self.adjacency[v as usize].len();
        let (old, new) = if up { (d - 1, d) } else { (d + 1, d) };
        self.degree_histogram[old] -= 1;
        if new == self.degree_histogram.len() {
            self.degree_histogram.push(0);
        }
        self.degree_histogram[new] += 1;
        while self.degree_histogram.len() > 1 && *self.degree_histogram.last().unwrap() == 0 {
            self.degree_histogram.pop();
        }
    }

    pub fn add_edge(&mut self, a: VertexId, b: VertexId) -> Result<(), UpdateError> {
        self.check_endpoints(a, b)?;
        let pos_a = match self.adjacency[a as usize].binary_search(&b) {
            Ok(_) => return Err(UpdateError::EdgeExists(a, b)),
            Err(pos) => pos,
        };
        let pos_b = self.adjacency[b as usize].binary_search(&a).unwrap_err();
        self.adjacency[a as usize].insert(pos_a, b);
        self.adjacency[b as usize].insert(pos_b, a);
        self.edge_count += 1;
        self.bump_degree(a, true);
        self.bump_degree(b, true);
        Ok(())
    }

    pub fn remove_edge(&mut self, a: VertexId, b: VertexId) -> Result<(), UpdateError> {
        self.check_endpoints(a, b)?;
        let pos_a = self.adjacency[a as usize]
            .binary_search(&b)
            .map_err(|_| UpdateError::EdgeMissing(a, b))?;
        let pos_b = self.adjacency[b as usize].binary_search(&a).unwrap();
        self.adjacency[a as usize].remove(pos_a);
        self.adjacency[b as usize].remove(pos_b);
        self.edge_count -= 1;
        self.bump_degree(a, false);
        self.bump_degree(b, false);
        Ok(())
    }

    /// Checks whether `op` can be applied without changing the graph.
    pub fn check_update(&self, op: UpdateOp) -> Result<(), UpdateError> {
        self.check_endpoints(op.src, op.dst)?;
        match (op.kind, self.has_edge(op.src, op.dst)) {
            (OpKind::Add, true) => Err(UpdateError::EdgeExists(op.src, op.dst)),
            (OpKind::Delete, false) => Err(UpdateError::EdgeMissing(op.src, op.dst)),
            _ => Ok(()),
        }
    }

    pub fn apply_update(&mut self, op: UpdateOp) -> Result<(), UpdateError> {
        match op.kind {
            OpKind::Add => self.add_edge(op.src, op.dst),
            OpKind::Delete => self.remove_edge(op.src, op.dst),
        }
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0 as VertexId]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &w in self.neighbors(v) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        reached == n
    }

    /// Serializes in the line format accepted by [`load_graph`].
    pub fn to_text(&self, table: &LabelTable) -> String {
        let mut out = String::new();
        writeln!(out, "t {} {}", self.vertex_count(), self.edge_count()).unwrap();
        for v in self.vertices() {
            let label = self.label(v);
            match table.name(label) {
                Some(name) => writeln!(out, "v {v} {name}").unwrap(),
                None => writeln!(out, "v {v} {label}").unwrap(),
            }
        }
        for (a, b) in self.edges() {
            writeln!(out, "e {a} {b}").unwrap();
        }
        out
    }
}

/// A connected query graph with at least two vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryGraph(LabeledGraph);

impl QueryGraph {
    pub fn new(graph: LabeledGraph) -> Result<Self, GraphError> {
        if graph.vertex_count() < 2 {
            return Err(GraphError::QueryTooSmall(graph.vertex_count()));
        }
        if !graph.is_connected() {
            return Err(GraphError::QueryDisconnected);
        }
        Ok(QueryGraph(graph))
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.0
    }

    pub fn into_inner(self) -> LabeledGraph {
        self.0
    }
}

impl Deref for QueryGraph {
    type Target = LabeledGraph;

    fn deref(&self) -> &LabeledGraph {
        &self.0
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T, GraphError> {
    tok.parse()
        .map_err(|_| GraphError::parse(line, format!("invalid {what} `{tok}`")))
}

/// Parses a graph file (`t`/`v`/`e` lines) interning labels into `table`.
pub fn load_graph(text: &str, table: &mut LabelTable) -> Result<LabeledGraph, GraphError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut labels = Vec::new();
    let mut graph: Option<LabeledGraph> = None;
    let mut edges_seen = 0usize;

    for (line, toks) in content_lines(text) {
        match toks[0] {
            "t" => {
                if toks.len() != 3 {
                    return Err(GraphError::parse(line, "expected `t <vertices> <edges>`"));
                }
                if header.is_some() {
                    return Err(GraphError::parse(line, "duplicate header"));
                }
                let n = parse_num(line, toks[1], "vertex count")?;
                let m = parse_num(line, toks[2], "edge count")?;
                header = Some((n, m, line));
            }
            "v" => {
                let (n, _, _) = header.ok_or_else(|| GraphError::parse(line, "`v` before header"))?;
                if toks.len() != 3 {
                    return Err(GraphError::parse(line, "expected `v <id> <label>`"));
                }
                if graph.is_some() {
                    return Err(GraphError::parse(line, "`v` line after edges"));
                }
                let id: usize = parse_num(line, toks[1], "vertex id")?;
                if id != labels.len() {
                    return Err(GraphError::invalid(
                        line,
                        format!("vertex id {id} out of order, expected {}", labels.len()),
                    ));
                }
                if id >= n {
                    return Err(GraphError::invalid(
                        line,
                        format!("vertex id {id} exceeds declared count {n}"),
                    ));
                }
                labels.push(table.intern(toks[2]));
            }
            "e" => {
                if header.is_none() {
                    return Err(GraphError::parse(line, "`e` before header"));
                }
                if toks.len() != 3 {
                    return Err(GraphError::parse(line, "expected `e <src> <dst>`"));
                }
                let a: VertexId = parse_num(line, toks[1], "vertex id")?;
                let b: VertexId = parse_num(line, toks[2], "vertex id")?;
                let g = graph.get_or_insert_with(|| LabeledGraph::new(std::mem::take(&mut labels)));
                g.add_edge(a, b).map_err(|e| match e {
                    UpdateError::OutOfRange(v) => {
                        GraphError::invalid(line, format!("undeclared vertex {v}"))
                    }
                    UpdateError::SelfLoop(v) => {
                        GraphError::invalid(line, format!("self-loop on vertex {v}"))
                    }
                    UpdateError::EdgeExists(a, b) => {
                        GraphError::invalid(line, format!("duplicate edge ({a}, {b})"))
                    }
                    UpdateError::EdgeMissing(..) => unreachable!(),
                })?;
                edges_seen += 1;
            }
            other => {
                return Err(GraphError::parse(line, format!("unknown line tag `{other}`")));
            }
        }
    }

    let (n, m, header_line) = header.ok_or_else(|| GraphError::parse(0, "missing `t` header"))?;
    let graph = graph.unwrap_or_else(|| LabeledGraph::new(labels));
    if graph.vertex_count() != n {
        return Err(GraphError::invalid(
            header_line,
            format!("declared {n} vertices, found {}", graph.vertex_count()),
        ));
    }
    if edges_seen != m {
        return Err(GraphError::invalid(
            header_line,
            format!("declared {m} edges, found {edges_seen}"),
        ));
    }
    Ok(graph)
}

/// Parses an update stream (`+ a b` / `- a b` lines), validating endpoints
/// against a graph with `vertex_count` vertices.
pub fn load_update_stream(text: &str, vertex_count: usize) -> Result<Vec<UpdateOp>, GraphError> {
    let mut ops = Vec::new();
    for (line, toks) in content_lines(text) {
        let kind = match toks[0] {
            "+" => OpKind::Add,
            "-" => OpKind::Delete,
            other => {
                return Err(GraphError::parse(line, format!("unknown operation `{other}`")));
            }
        };
        if toks.len() != 3 {
            return Err(GraphError::parse(line, "expected `<+|-> <src> <dst>`"));
        }
        let src: VertexId = parse_num(line, toks[1], "vertex id")?;
        let dst: VertexId = parse_num(line, toks[2], "vertex id")?;
        for v in [src, dst] {
            if v as usize >= vertex_count {
                return Err(GraphError::invalid(
                    line,
                    format!("endpoint {v} out of range for {vertex_count} vertices"),
                ));
            }
        }
        if src == dst {
            return Err(GraphError::invalid(line, format!("self-loop on vertex {src}")));
        }
        ops.push(UpdateOp { kind, src, dst });
    }
    Ok(ops)
}

pub fn write_update_stream(ops: &[UpdateOp]) -> String {
    let mut out = String::new();
    for op in ops {
        writeln!(out, "{op}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(text: &str) -> Result<LabeledGraph, GraphError> {
        load_graph(text, &mut LabelTable::new())
    }

    #[test]
    fn smallest_graph() {
        let g = load("t 2 1\nv 0 A\nv 1 B\ne 0 1\n").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.max_degree(), 1);
        assert_ne!(g.label(0), g.label(1));
    }

    #[test]
    fn comments_and_blank_lines() {
        let g = load("# header next\n\nt 3 2\nv 0 x\nv 1 x\n# mid\nv 2 y\ne 0 1\ne 1 2\n").unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.label(0), g.label(1));
    }

    #[test]
    fn rejects_self_loop() {
        let err = load("t 1 1\nv 0 A\ne 0 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Validation { line: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_duplicate_edge() {
        let err = load("t 2 2\nv 0 A\nv 1 B\ne 0 1\ne 1 0\n").unwrap_err();
        assert!(matches!(err, GraphError::Validation { line: 5, .. }), "{err}");
    }

    #[test]
    fn rejects_undeclared_vertex() {
        let err = load("t 2 1\nv 0 A\nv 1 B\ne 0 2\n").unwrap_err();
        assert!(matches!(err, GraphError::Validation { line: 4, .. }), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load("t 2 1\nv 0 A\nv one B\ne 0 1\n").unwrap_err();
        assert_eq!(
            err,
            GraphError::Parse {
                line: 3,
                message: "invalid vertex id `one`".into()
            }
        );
        assert!(matches!(load("t 2 1\nq 0 A\n"), Err(GraphError::Parse { line: 2, .. })));
    }

    #[test]
    fn header_counts_must_match() {
        assert!(load("t 3 1\nv 0 A\nv 1 B\ne 0 1\n").is_err());
        assert!(load("t 2 2\nv 0 A\nv 1 B\ne 0 1\n").is_err());
    }

    #[test]
    fn stream_parsing() {
        let ops = load_update_stream("- 4 6\n+ 2 6\n", 7).unwrap();
        assert_eq!(ops, vec![UpdateOp::delete(4, 6), UpdateOp::add(2, 6)]);
        assert!(load_update_stream("", 7).unwrap().is_empty());
        assert!(matches!(
            load_update_stream("+ 0 99\n", 7),
            Err(GraphError::Validation { line: 1, .. })
        ));
        assert!(matches!(
            load_update_stream("* 0 1\n", 7),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn add_then_delete_restores_graph() {
        let mut table = LabelTable::new();
        let original = load_graph("t 3 1\nv 0 A\nv 1 B\nv 2 A\ne 0 1\n", &mut table).unwrap();
        let mut g = original.clone();
        g.apply_update(UpdateOp::add(1, 2)).unwrap();
        assert_eq!(g.max_degree(), 2);
        g.apply_update(UpdateOp::delete(2, 1)).unwrap();
        assert_eq!(g, original);
    }

    #[test]
    fn invalid_updates_are_reported() {
        let mut g = LabeledGraph::from_edges(vec![0, 0, 0], [(0, 1)]).unwrap();
        assert_eq!(g.apply_update(UpdateOp::add(1, 0)), Err(UpdateError::EdgeExists(1, 0)));
        assert_eq!(
            g.apply_update(UpdateOp::delete(1, 2)),
            Err(UpdateError::EdgeMissing(1, 2))
        );
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn query_graph_checks() {
        let single = LabeledGraph::new(vec![0]);
        assert_eq!(QueryGraph::new(single), Err(GraphError::QueryTooSmall(1)));
        let split = LabeledGraph::from_edges(vec![0; 4], [(0, 1), (2, 3)]).unwrap();
        assert_eq!(QueryGraph::new(split), Err(GraphError::QueryDisconnected));
        let path = LabeledGraph::from_edges(vec![0; 3], [(0, 1), (1, 2)]).unwrap();
        assert!(QueryGraph::new(path).is_ok());
    }

    fn arb_graph() -> impl Strategy<Value = (Vec<Label>, Vec<(VertexId, VertexId)>)> {
        (2usize..12).prop_flat_map(|n| {
            let labels = prop::collection::vec(0u32..3, n);
            let edges = prop::collection::vec((0..n as VertexId, 0..n as VertexId), 0..30);
            (labels, edges)
        })
    }

    fn build(labels: &[Label], edges: &[(VertexId, VertexId)]) -> LabeledGraph {
        let mut g = LabeledGraph::new(labels.to_vec());
        for &(a, b) in edges {
            let _ = g.add_edge(a, b);
        }
        g
    }

    fn bfs_connected(g: &LabeledGraph) -> bool {
        // independent reachability via repeated relaxation
        let n = g.vertex_count();
        let mut reach = vec![false; n];
        reach[0] = true;
        loop {
            let mut changed = false;
            for (a, b) in g.edges() {
                let (a, b) = (a as usize, b as usize);
                if reach[a] != reach[b] {
                    reach[a] = true;
                    reach[b] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        reach.iter().all(|&r| r)
    }

    proptest! {
        #[test]
        fn replay_equals_rebuild(
            (labels, edges) in arb_graph(),
            ops in prop::collection::vec((any::<bool>(), 0u32..12, 0u32..12), 0..40),
        ) {
            let mut g = build(&labels, &edges);
            let n = labels.len() as VertexId;
            for (add, a, b) in ops {
                let (a, b) = (a % n, b % n);
                let op = if add { UpdateOp::add(a, b) } else { UpdateOp::delete(a, b) };
                let before = g.clone();
                if g.apply_update(op).is_err() {
                    prop_assert_eq!(&g, &before);
                }
                for v in g.vertices() {
                    for &w in g.neighbors(v) {
                        prop_assert!(g.neighbors(w).contains(&v));
                    }
                }
            }
            let rebuilt = LabeledGraph::from_edges(labels.clone(), g.edges().collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(rebuilt.max_degree(), g.vertices().map(|v| g.degree(v)).max().unwrap_or(0));
            prop_assert_eq!(rebuilt.edge_count() * 2, g.vertices().map(|v| g.degree(v)).sum::<usize>());
            prop_assert_eq!(rebuilt, g);
        }

        #[test]
        fn text_round_trip((labels, edges) in arb_graph()) {
            let g = build(&labels, &edges);
            let mut table = LabelTable::new();
            for l in 0..3 {
                table.intern(&format!("L{l}"));
            }
            let text = g.to_text(&table);
            let back = load_graph(&text, &mut table).unwrap();
            prop_assert_eq!(back, g);
        }

        #[test]
        fn connectivity_agrees_with_reachability((labels, edges) in arb_graph()) {
            let g = build(&labels, &edges);
            prop_assert_eq!(g.is_connected(), bfs_connected(&g));
        }
    }
}
