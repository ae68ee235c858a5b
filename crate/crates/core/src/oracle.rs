//! Brute-force reference answers for small instances.
//!
//! Nothing here touches the index or the search: matches are enumerated by
//! plain backtracking over query vertices in id order, using only label and
//! edge lookups on the graphs themselves.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::graph::{LabeledGraph, VertexId};
use crate::matching::Bigraph;

pub const ORACLE_MAX_QUERY: usize = 8;
pub const ORACLE_MAX_DATA: usize = 64;
pub const ORACLE_MAX_LEFT: usize = 7;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("query has {0} vertices, oracle limit is {ORACLE_MAX_QUERY}")]
    QueryTooLarge(usize),
    #[error("data graph has {0} vertices, oracle limit is {ORACLE_MAX_DATA}")]
    DataTooLarge(usize),
    #[error("bigraph has {0} left vertices, oracle limit is {ORACLE_MAX_LEFT}")]
    BigraphTooLarge(usize),
}

/// Every match of a query in one data graph state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    /// Hash of the data graph the matches were computed on.
    pub fingerprint: u64,
    pub matches: BTreeSet<Vec<VertexId>>,
}

pub fn fingerprint(g: &LabeledGraph) -> u64 {
    let mut h = DefaultHasher::new();
    g.labels().hash(&mut h);
    for e in g.edges() {
        e.hash(&mut h);
    }
    h.finish()
}

/// All injective, label- and edge-preserving maps from `query` into `data`.
pub fn enumerate_static(query: &LabeledGraph, data: &LabeledGraph) -> Result<Snapshot, OracleError> {
    if query.vertex_count() > ORACLE_MAX_QUERY {
        return Err(OracleError::QueryTooLarge(query.vertex_count()));
    }
    if data.vertex_count() > ORACLE_MAX_DATA {
        return Err(OracleError::DataTooLarge(data.vertex_count()));
    }
    let n = query.vertex_count();
    let mut image: Vec<VertexId> = Vec::with_capacity(n);
    let mut used = vec![false; data.vertex_count()];
    let mut matches = BTreeSet::new();

    fn extend(
        query: &LabeledGraph,
        data: &LabeledGraph,
        image: &mut Vec<VertexId>,
        used: &mut [bool],
        out: &mut BTreeSet<Vec<VertexId>>,
    ) {
        let u = image.len() as VertexId;
        if image.len() == query.vertex_count() {
            out.insert(image.clone());
            return;
        }
        for v in data.vertices() {
            if used[v as usize] || data.label(v) != query.label(u) {
                continue;
            }
            let fits = (0..u).all(|w| !query.has_edge(w, u) || data.has_edge(image[w as usize], v));
            if !fits {
                continue;
            }
            used[v as usize] = true;
            image.push(v);
            extend(query, data, image, used, out);
            image.pop();
            used[v as usize] = false;
        }
    }

    if n > 0 {
        extend(query, data, &mut image, &mut used, &mut matches);
    }
    Ok(Snapshot {
        fingerprint: fingerprint(data),
        matches,
    })
}

/// Matches gained and lost between two snapshots, each sorted.
pub fn diff_snapshots(before: &Snapshot, after: &Snapshot) -> (Vec<Vec<VertexId>>, Vec<Vec<VertexId>>) {
    let added = after.matches.difference(&before.matches).cloned().collect();
    let removed = before.matches.difference(&after.matches).cloned().collect();
    (added, removed)
}

/// Decides left saturation by trying every injective assignment of left
/// vertices to right vertices.
pub fn exhaustive_injective(b: &Bigraph) -> Result<bool, OracleError> {
    let n = b.left_len();
    if n > ORACLE_MAX_LEFT {
        return Err(OracleError::BigraphTooLarge(n));
    }
    fn place(b: &Bigraph, l: usize, taken: &mut Vec<bool>) -> bool {
        if l == b.left_len() {
            return true;
        }
        for r in 0..b.right_len() {
            if !taken[r] && b.has_edge(l, r) {
                taken[r] = true;
                let ok = place(b, l + 1, taken);
                taken[r] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    Ok(place(b, 0, &mut vec![false; b.right_len()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_in_k4() {
        let tri = LabeledGraph::from_edges(vec![0; 3], [(0, 1), (1, 2), (0, 2)]).unwrap();
        let k4 = LabeledGraph::from_edges(vec![0; 4], [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        // 4 vertex triples, 6 orderings each
        assert_eq!(enumerate_static(&tri, &k4).unwrap().matches.len(), 24);
    }

    #[test]
    fn limits_are_refused() {
        let big = LabeledGraph::new(vec![0; 9]);
        let g = LabeledGraph::new(vec![0; 3]);
        assert_eq!(enumerate_static(&big, &g), Err(OracleError::QueryTooLarge(9)));
        assert_eq!(
            enumerate_static(&g, &LabeledGraph::new(vec![0; 65])),
            Err(OracleError::DataTooLarge(65))
        );
        assert!(exhaustive_injective(&Bigraph::with_sizes(8, 8)).is_err());
    }

    #[test]
    fn diff_reports_both_sides() {
        let a = Snapshot {
            fingerprint: 0,
            matches: [vec![0, 1], vec![1, 2]].into(),
        };
        let b = Snapshot {
            fingerprint: 1,
            matches: [vec![1, 2], vec![2, 3]].into(),
        };
        assert_eq!(diff_snapshots(&a, &b), (vec![vec![2, 3]], vec![vec![0, 1]]));
    }
}
