//! Saturating ("injective") matchings in small bipartite graphs.
//!
//! The left side always has to be matched completely. Two cheap Hall
//! conditions reject most failing bigraphs before any augmenting path search:
//! a left vertex without edges, and fewer covered right vertices than left
//! vertices.

use std::collections::VecDeque;

use crate::graph::VertexId;

/// Left bigraphs up to this size use plain augmenting paths.
const HOPCROFT_KARP_THRESHOLD: usize = 24;

/// Bipartite graph between query-side (left) and data-side (right) vertices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bigraph {
    left: Vec<VertexId>,
    right: Vec<VertexId>,
    adj: Vec<Vec<usize>>,
}

impl Bigraph {
    pub fn new(left: Vec<VertexId>, right: Vec<VertexId>) -> Self {
        let adj = vec![Vec::new(); left.len()];
        Bigraph { left, right, adj }
    }

    /// A bigraph over index ranges `0..left` and `0..right`.
    pub fn with_sizes(left: usize, right: usize) -> Self {
        Bigraph::new(
            (0..left as VertexId).collect(),
            (0..right as VertexId).collect(),
        )
    }

    /// Adds an edge between left index `l` and right index `r`. Duplicates are ignored.
    pub fn add_edge(&mut self, l: usize, r: usize) {
        assert!(r < self.right.len(), "right index {r} out of range");
        if !self.adj[l].contains(&r) {
            self.adj[l].push(r);
        }
    }

    pub fn left(&self) -> &[VertexId] {
        &self.left
    }

    pub fn right(&self) -> &[VertexId] {
        &self.right
    }

    pub fn left_len(&self) -> usize {
        self.left.len()
    }

    pub fn right_len(&self) -> usize {
        self.right.len()
    }

    pub fn edges_of(&self, l: usize) -> &[usize] {
        &self.adj[l]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, l: usize, r: usize) -> bool {
        self.adj[l].contains(&r)
    }
}

/// Outcome of a saturation check, recording which test decided it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Saturation {
    /// Left vertex has no incident edge.
    IsolatedLeft(usize),
    /// Fewer right vertices carry an edge than there are left vertices.
    TooFewCovered { covered: usize, needed: usize },
    /// Decided by maximum matching.
    Matching { size: usize, needed: usize },
}

impl Saturation {
    pub fn saturated(self) -> bool {
        matches!(self, Saturation::Matching { size, needed } if size == needed)
    }

    pub fn is_fast_path(self) -> bool {
        !matches!(self, Saturation::Matching { .. })
    }
}

pub fn check_saturation(b: &Bigraph) -> Saturation {
    let needed = b.left_len();
    if let Some(l) = b.adj.iter().position(Vec::is_empty) {
        return Saturation::IsolatedLeft(l);
    }
    let mut covered = vec![false; b.right_len()];
    let mut covered_count = 0;
    for &r in b.adj.iter().flatten() {
        if !covered[r] {
            covered[r] = true;
            covered_count += 1;
        }
    }
    if covered_count < needed {
        return Saturation::TooFewCovered {
            covered: covered_count,
            needed,
        };
    }
    let size = maximum_matching(&b.adj, b.right_len())
        .iter()
        .filter(|m| m.is_some())
        .count();
    Saturation::Matching { size, needed }
}

/// True iff a matching saturates every left vertex (vacuously true when the
/// left side is empty).
pub fn has_injective_matching(b: &Bigraph) -> bool {
    check_saturation(b).saturated()
}

/// Weaker test used by the `-InjM` ablation: every left vertex has an edge.
pub fn every_left_has_edge(b: &Bigraph) -> bool {
    b.adj.iter().all(|e| !e.is_empty())
}

/// Maximum matching over an adjacency list `left -> [right]`. Returns the
/// mate of each left vertex.
pub fn maximum_matching(adj: &[Vec<usize>], right_len: usize) -> Vec<Option<usize>> {
    if adj.len() > HOPCROFT_KARP_THRESHOLD {
        hopcroft_karp(adj, right_len)
    } else {
        augmenting_paths(adj, right_len)
    }
}

/// Greedy seed followed by one augmenting-path search per unmatched left vertex.
pub fn augmenting_paths(adj: &[Vec<usize>], right_len: usize) -> Vec<Option<usize>> {
    let mut mate_left: Vec<Option<usize>> = vec![None; adj.len()];
    let mut mate_right: Vec<Option<usize>> = vec![None; right_len];

    for (l, edges) in adj.iter().enumerate() {
        if let Some(&r) = edges.iter().find(|&&r| mate_right[r].is_none()) {
            mate_left[l] = Some(r);
            mate_right[r] = Some(l);
        }
    }

    let mut visited = vec![false; right_len];
    // (left vertex, next edge position)
    let mut stack: Vec<(usize, usize)> = Vec::new();
    // right vertex used to reach stack[i + 1]
    let mut via: Vec<usize> = Vec::new();
    for root in 0..adj.len() {
        if mate_left[root].is_some() {
            continue;
        }
        visited.iter_mut().for_each(|v| *v = false);
        stack.clear();
        via.clear();
        stack.push((root, 0));
        while let Some(&mut (l, ref mut pos)) = stack.last_mut() {
            if *pos == adj[l].len() {
                stack.pop();
                via.pop();
                continue;
            }
            let r = adj[l][*pos];
            *pos += 1;
            if visited[r] {
                continue;
            }
            visited[r] = true;
            match mate_right[r] {
                None => {
                    // flip the path root -> ... -> l -> r
                    via.push(r);
                    for (i, &(pl, _)) in stack.iter().enumerate() {
                        let pr = via[i];
                        mate_left[pl] = Some(pr);
                        mate_right[pr] = Some(pl);
                    }
                    break;
                }
                Some(next) => {
                    via.push(r);
                    stack.push((next, 0));
                }
            }
        }
    }
    mate_left
}

pub fn hopcroft_karp(adj: &[Vec<usize>], right_len: usize) -> Vec<Option<usize>> {
    const INF: usize = usize::MAX;
    let n = adj.len();
    let mut mate_left: Vec<Option<usize>> = vec![None; n];
    let mut mate_right: Vec<Option<usize>> = vec![None; right_len];
    let mut dist = vec![INF; n];

    loop {
        // BFS layering from free left vertices
        let mut queue = VecDeque::new();
        for l in 0..n {
            if mate_left[l].is_none() {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = INF;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                match mate_right[r] {
                    None => found = true,
                    Some(next) if dist[next] == INF => {
                        dist[next] = dist[l] + 1;
                        queue.push_back(next);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }

        // layered DFS, iterative
        let mut next_edge = vec![0usize; n];
        for root in 0..n {
            if mate_left[root].is_some() {
                continue;
            }
            let mut path: Vec<usize> = vec![root];
            while let Some(&l) = path.last() {
                if next_edge[l] == adj[l].len() {
                    dist[l] = INF;
                    path.pop();
                    continue;
                }
                let r = adj[l][next_edge[l]];
                next_edge[l] += 1;
                match mate_right[r] {
                    None => {
                        // augment along path; each left vertex takes the right
                        // vertex it last advanced through
                        let mut target = r;
                        for &pl in path.iter().rev() {
                            let prev = mate_left[pl];
                            mate_left[pl] = Some(target);
                            mate_right[target] = Some(pl);
                            match prev {
                                Some(p) => target = p,
                                None => break,
                            }
                        }
                        break;
                    }
                    Some(next) if dist[next] == dist[l] + 1 => path.push(next),
                    Some(_) => {}
                }
            }
        }
    }
    mate_left
}
