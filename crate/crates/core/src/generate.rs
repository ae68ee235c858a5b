//! Seeded random sessions: a labeled data graph, a query sampled from it, and
//! an edge stream with twice as many deletions as additions.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::{LabeledGraph, QueryGraph, UpdateOp, VertexId};

#[derive(Debug, Clone, Serialize)]
pub struct SessionParams {
    pub query_vertices: RangeInclusive<usize>,
    pub data_vertices: RangeInclusive<usize>,
    /// Number of distinct labels is drawn from this range.
    pub labels: RangeInclusive<u32>,
    pub avg_degree: RangeInclusive<f64>,
    pub ops: usize,
    /// Deletions per addition.
    pub deletes_per_add: usize,
}

impl Default for SessionParams {
    fn default() -> Self {
        SessionParams {
            query_vertices: 3..=6,
            data_vertices: 10..=40,
            labels: 2..=4,
            avg_degree: 2.0..=4.0,
            ops: 50,
            deletes_per_add: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionInstance {
    pub seed: u64,
    pub query: QueryGraph,
    pub data: LabeledGraph,
    pub stream: Vec<UpdateOp>,
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pair(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    (a.min(b), a.max(b))
}

/// Random simple graph with about `n * avg_degree / 2` edges.
pub fn random_graph(rng: &mut impl Rng, n: usize, labels: u32, avg_degree: f64) -> LabeledGraph {
    let label_vec = (0..n).map(|_| rng.gen_range(0..labels.max(1))).collect();
    let mut g = LabeledGraph::new(label_vec);
    let max_edges = n * n.saturating_sub(1) / 2;
    let target = ((n as f64 * avg_degree / 2.0).round() as usize).min(max_edges);
    while g.edge_count() < target {
        let a = rng.gen_range(0..n as VertexId);
        let b = rng.gen_range(0..n as VertexId);
        if a != b && !g.has_edge(a, b) {
            g.add_edge(a, b).unwrap();
        }
    }
    g
}

/// Random connected graph on `n` vertices: a random tree plus extra edges.
pub fn random_connected_query(rng: &mut impl Rng, n: usize, labels: u32, extra_edges: usize) -> QueryGraph {
    let label_vec = (0..n).map(|_| rng.gen_range(0..labels.max(1))).collect();
    let mut g = LabeledGraph::new(label_vec);
    for v in 1..n as VertexId {
        let parent = rng.gen_range(0..v);
        g.add_edge(parent, v).unwrap();
    }
    let max_edges = n * n.saturating_sub(1) / 2;
    let target = (g.edge_count() + extra_edges).min(max_edges);
    while g.edge_count() < target {
        let a = rng.gen_range(0..n as VertexId);
        let b = rng.gen_range(0..n as VertexId);
        if a != b && !g.has_edge(a, b) {
            g.add_edge(a, b).unwrap();
        }
    }
    QueryGraph::new(g).expect("tree plus edges is connected")
}

/// Grows a connected vertex set of up to `k` vertices from a random start and
/// returns the induced subgraph with some non-tree edges dropped. Returns
/// `None` if no component reaches two vertices.
pub fn sample_query(rng: &mut impl Rng, data: &LabeledGraph, k: usize) -> Option<QueryGraph> {
    let mut starts: Vec<VertexId> = data.vertices().filter(|&v| data.degree(v) > 0).collect();
    starts.shuffle(rng);
    let mut best: Option<Vec<VertexId>> = None;
    for &s in starts.iter().take(8) {
        let mut chosen = vec![s];
        let mut tree = vec![];
        loop {
            if chosen.len() == k {
                break;
            }
            let frontier: Vec<(VertexId, VertexId)> = chosen
                .iter()
                .flat_map(|&c| data.neighbors(c).iter().map(move |&w| (c, w)))
                .filter(|(_, w)| !chosen.contains(w))
                .collect();
            let Some(&(from, to)) = frontier.choose(rng) else { break };
            chosen.push(to);
            tree.push(pair(from, to));
        }
        let better = best.as_ref().is_none_or(|b| chosen.len() > b.len());
        if better {
            best = Some(chosen);
            if best.as_ref().unwrap().len() == k {
                // keep the tree of this exact sample
                return Some(induced(rng, data, best.as_ref().unwrap(), &tree));
            }
        }
    }
    let chosen = best?;
    if chosen.len() < 2 {
        return None;
    }
    // rebuild a spanning tree by BFS order over the chosen set
    let mut tree = Vec::new();
    for (i, &v) in chosen.iter().enumerate().skip(1) {
        let parent = chosen[..i].iter().find(|&&p| data.has_edge(p, v)).copied().expect("grown connected");
        tree.push(pair(parent, v));
    }
    Some(induced(rng, data, &chosen, &tree))
}

fn induced(rng: &mut impl Rng, data: &LabeledGraph, chosen: &[VertexId], tree: &[(VertexId, VertexId)]) -> QueryGraph {
    let local = |v: VertexId| chosen.iter().position(|&c| c == v).unwrap() as VertexId;
    let labels = chosen.iter().map(|&v| data.label(v)).collect();
    let mut q = LabeledGraph::new(labels);
    for (i, &a) in chosen.iter().enumerate() {
        for &b in &chosen[i + 1..] {
            if !data.has_edge(a, b) {
                continue;
            }
            if tree.contains(&pair(a, b)) || rng.gen_bool(0.6) {
                q.add_edge(local(a), local(b)).unwrap();
            }
        }
    }
    QueryGraph::new(q).expect("contains a spanning tree")
}

/// Update stream over `data`. Additions prefer edges from `pool` (edges held
/// back from the graph); deletions pick a random present edge. When no edge is
/// left to delete the op becomes an addition.
pub fn random_stream(
    rng: &mut impl Rng,
    data: &LabeledGraph,
    pool: &[(VertexId, VertexId)],
    ops: usize,
    deletes_per_add: usize,
) -> Vec<UpdateOp> {
    let n = data.vertex_count() as VertexId;
    let mut adds_left = ops / (deletes_per_add + 1);
    let mut deletes_left = ops - adds_left;

    let mut present: BTreeSet<(VertexId, VertexId)> = data.edges().collect();
    let mut held: BTreeSet<(VertexId, VertexId)> = pool.iter().map(|&(a, b)| pair(a, b)).collect();
    let max_edges = (n as usize) * (n as usize).saturating_sub(1) / 2;
    let mut out = Vec::with_capacity(ops);
    for _ in 0..ops {
        let add = if present.is_empty() {
            true
        } else if present.len() == max_edges {
            false
        } else {
            rng.gen_range(0..adds_left + deletes_left) < adds_left
        };
        if add {
            adds_left = adds_left.saturating_sub(1);
        } else {
            deletes_left = deletes_left.saturating_sub(1);
        }
        let oriented = |rng: &mut dyn rand::RngCore, (a, b): (VertexId, VertexId)| {
            if rng.gen_bool(0.5) {
                (a, b)
            } else {
                (b, a)
            }
        };
        if add {
            let e = if !held.is_empty() && rng.gen_bool(0.8) {
                let i = rng.gen_range(0..held.len());
                *held.iter().nth(i).unwrap()
            } else {
                loop {
                    let a = rng.gen_range(0..n);
                    let b = rng.gen_range(0..n);
                    if a != b && !present.contains(&pair(a, b)) {
                        break pair(a, b);
                    }
                }
            };
            held.remove(&e);
            present.insert(e);
            let (a, b) = oriented(rng, e);
            out.push(UpdateOp::add(a, b));
        } else {
            let i = rng.gen_range(0..present.len());
            let e = *present.iter().nth(i).unwrap();
            present.remove(&e);
            held.insert(e);
            let (a, b) = oriented(rng, e);
            out.push(UpdateOp::delete(a, b));
        }
    }
    out
}

/// A complete seeded session. The query is sampled from the full graph, and
/// the edges the stream adds first are held back from the initial graph.
pub fn random_session(seed: u64, params: &SessionParams) -> SessionInstance {
    let mut rng = rng_for(seed);
    let n = rng.gen_range(params.data_vertices.clone());
    let labels = rng.gen_range(params.labels.clone());
    let degree = rng.gen_range(params.avg_degree.clone());
    let k = rng.gen_range(params.query_vertices.clone());
    let deletes = params.ops - params.ops / (params.deletes_per_add + 1);
    let degree = degree.max(2.0 * (deletes + 1) as f64 / n as f64);
    let full = random_graph(&mut rng, n, labels, degree);
    let query = sample_query(&mut rng, &full, k)
        .filter(|q| q.vertex_count() >= (*params.query_vertices.start()).min(2))
        .unwrap_or_else(|| random_connected_query(&mut rng, k, labels, 1));

    let mut edges: Vec<(VertexId, VertexId)> = full.edges().collect();
    edges.shuffle(&mut rng);
    let held = (params.ops / (params.deletes_per_add + 1)).min(edges.len() / 3);
    let pool: Vec<_> = edges[..held].to_vec();
    let mut data = full.clone();
    for &(a, b) in &pool {
        data.remove_edge(a, b).unwrap();
    }
    let stream = random_stream(&mut rng, &data, &pool, params.ops, params.deletes_per_add);
    SessionInstance {
        seed,
        query,
        data,
        stream,
    }
}
