//! Kernel/shell decompositions of a query graph.
//!
//! The kernel is a connected vertex cover that contains a designated seed
//! edge; the shell is everything else and therefore an independent set whose
//! vertices only touch kernel vertices. Only kernel vertices are matched by
//! backtracking, shell vertices are joined in afterwards.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{QueryGraph, VertexId};
use crate::matching;

/// Largest query the exhaustive minimum solver accepts.
pub const EXACT_MAX_VERTICES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("query has {0} vertices, exact search is limited to {EXACT_MAX_VERTICES}")]
    TooLarge(usize),
    #[error("({0}, {1}) is not a query edge")]
    NotAnEdge(VertexId, VertexId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelShellPlan {
    pub seed: (VertexId, VertexId),
    /// Matching order; starts with the seed endpoints, every later vertex is
    /// adjacent to an earlier one.
    pub kernel: Vec<VertexId>,
    /// Sorted ascending.
    pub shell: Vec<VertexId>,
}

impl KernelShellPlan {
    pub fn kernel_len(&self) -> usize {
        self.kernel.len()
    }
}

impl fmt::Display for KernelShellPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |vs: &[VertexId]| {
            vs.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "plan {} {} kernel={} shell={}",
            self.seed.0,
            self.seed.1,
            join(&self.kernel),
            join(&self.shell)
        )
    }
}

/// Plans keyed by undirected query edge `(a, b)` with `a < b`.
pub type PlanMap = BTreeMap<(VertexId, VertexId), KernelShellPlan>;

pub fn edge_key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// True iff `plan` is a valid decomposition of `q`.
pub fn validate_plan(q: &QueryGraph, plan: &KernelShellPlan) -> bool {
    let n = q.vertex_count();
    let (uk, ul) = plan.seed;
    if !q.has_edge(uk, ul) {
        return false;
    }
    let mut in_kernel = vec![false; n];
    let mut seen = vec![false; n];
    for &u in plan.kernel.iter().chain(&plan.shell) {
        if u as usize >= n || seen[u as usize] {
            return false;
        }
        seen[u as usize] = true;
    }
    if seen.iter().any(|s| !s) {
        return false;
    }
    for &u in &plan.kernel {
        in_kernel[u as usize] = true;
    }
    if plan.kernel.len() < 2 || !in_kernel[uk as usize] || !in_kernel[ul as usize] {
        return false;
    }
    let mut head = [plan.kernel[0], plan.kernel[1]];
    head.sort_unstable();
    let mut seed = [uk, ul];
    seed.sort_unstable();
    if head != seed {
        return false;
    }
    // cover + independent shell
    if q.edges().any(|(a, b)| !in_kernel[a as usize] && !in_kernel[b as usize]) {
        return false;
    }
    // connected prefix order
    plan.kernel
        .iter()
        .enumerate()
        .skip(2)
        .all(|(i, &u)| plan.kernel[..i].iter().any(|&p| q.has_edge(p, u)))
}

fn check_seed(q: &QueryGraph, uk: VertexId, ul: VertexId) -> Result<(), PlanError> {
    if q.has_edge(uk, ul) {
        Ok(())
    } else {
        Err(PlanError::NotAnEdge(uk, ul))
    }
}

/// Breadth-first order over the kernel starting at the seed endpoints; each
/// new layer is sorted by query degree, then id.
fn order_kernel(q: &QueryGraph, seed: (VertexId, VertexId), in_kernel: &[bool]) -> Vec<VertexId> {
    let n = q.vertex_count();
    let mut placed = vec![false; n];
    let mut order = vec![seed.0, seed.1];
    placed[seed.0 as usize] = true;
    placed[seed.1 as usize] = true;
    let mut frontier = order.clone();
    while !frontier.is_empty() {
        let mut layer: Vec<VertexId> = Vec::new();
        for &u in &frontier {
            for &w in q.neighbors(u) {
                if in_kernel[w as usize] && !placed[w as usize] {
                    placed[w as usize] = true;
                    layer.push(w);
                }
            }
        }
        layer.sort_unstable_by_key(|&w| (q.degree(w), w));
        order.extend_from_slice(&layer);
        frontier = layer;
    }
    debug_assert_eq!(order.len(), in_kernel.iter().filter(|&&k| k).count());
    order
}

fn plan_from_set(q: &QueryGraph, seed: (VertexId, VertexId), in_kernel: &[bool]) -> KernelShellPlan {
    let kernel = order_kernel(q, seed, in_kernel);
    let shell = q.vertices().filter(|&u| !in_kernel[u as usize]).collect();
    KernelShellPlan { seed, kernel, shell }
}

/// Finds an odd cycle among `alive` vertices, lowest start vertex first.
fn find_odd_cycle(q: &QueryGraph, alive: &[bool]) -> Option<Vec<VertexId>> {
    let n = q.vertex_count();
    let mut color = vec![u8::MAX; n];
    let mut on_stack = vec![false; n];
    for start in 0..n {
        if !alive[start] || color[start] != u8::MAX {
            continue;
        }
        color[start] = 0;
        on_stack[start] = true;
        // (vertex, next neighbor position)
        let mut stack: Vec<(VertexId, usize)> = vec![(start as VertexId, 0)];
        while let Some(&mut (x, ref mut pos)) = stack.last_mut() {
            let nbrs = q.neighbors(x);
            if *pos == nbrs.len() {
                on_stack[x as usize] = false;
                stack.pop();
                continue;
            }
            let y = nbrs[*pos];
            *pos += 1;
            if !alive[y as usize] {
                continue;
            }
            if color[y as usize] == u8::MAX {
                color[y as usize] = 1 - color[x as usize];
                on_stack[y as usize] = true;
                stack.push((y, 0));
            } else if color[y as usize] == color[x as usize] && on_stack[y as usize] {
                let from = stack.iter().position(|&(s, _)| s == y).unwrap();
                return Some(stack[from..].iter().map(|&(s, _)| s).collect());
            }
        }
    }
    None
}

/// Minimum vertex cover of the bipartite graph induced by `alive` (König).
fn bipartite_cover(q: &QueryGraph, alive: &[bool]) -> Vec<VertexId> {
    let n = q.vertex_count();
    let mut side = vec![u8::MAX; n];
    for s in 0..n {
        if !alive[s] || side[s] != u8::MAX {
            continue;
        }
        side[s] = 0;
        let mut queue = VecDeque::from([s as VertexId]);
        while let Some(x) = queue.pop_front() {
            for &y in q.neighbors(x) {
                if alive[y as usize] && side[y as usize] == u8::MAX {
                    side[y as usize] = 1 - side[x as usize];
                    queue.push_back(y);
                }
            }
        }
    }
    let left: Vec<VertexId> = (0..n as VertexId)
        .filter(|&u| alive[u as usize] && side[u as usize] == 0)
        .collect();
    let right: Vec<VertexId> = (0..n as VertexId)
        .filter(|&u| alive[u as usize] && side[u as usize] == 1)
        .collect();
    let right_pos = |u: VertexId| right.binary_search(&u).unwrap();
    let adj: Vec<Vec<usize>> = left
        .iter()
        .map(|&l| {
            q.neighbors(l)
                .iter()
                .filter(|&&w| alive[w as usize])
                .map(|&w| right_pos(w))
                .collect()
        })
        .collect();
    let mate_left = matching::maximum_matching(&adj, right.len());
    let mut mate_right = vec![None; right.len()];
    for (l, r) in mate_left.iter().enumerate() {
        if let Some(r) = *r {
            mate_right[r] = Some(l);
        }
    }
    // alternating reachability from free left vertices
    let mut reach_left = vec![false; left.len()];
    let mut reach_right = vec![false; right.len()];
    let mut queue: VecDeque<usize> = (0..left.len()).filter(|&l| mate_left[l].is_none()).collect();
    for &l in &queue {
        reach_left[l] = true;
    }
    while let Some(l) = queue.pop_front() {
        for &r in &adj[l] {
            if mate_left[l] == Some(r) || reach_right[r] {
                continue;
            }
            reach_right[r] = true;
            if let Some(next) = mate_right[r] {
                if !reach_left[next] {
                    reach_left[next] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    let mut cover: Vec<VertexId> = left
        .iter()
        .enumerate()
        .filter(|&(i, _)| !reach_left[i])
        .map(|(_, &u)| u)
        .chain(right.iter().enumerate().filter(|&(i, _)| reach_right[i]).map(|(_, &u)| u))
        .collect();
    cover.sort_unstable();
    cover
}

fn components(q: &QueryGraph, members: &[bool]) -> Vec<Vec<VertexId>> {
    let n = q.vertex_count();
    let mut comp = vec![usize::MAX; n];
    let mut out: Vec<Vec<VertexId>> = Vec::new();
    for s in 0..n {
        if !members[s] || comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[s] = id;
        let mut list = vec![s as VertexId];
        let mut queue = VecDeque::from([s as VertexId]);
        while let Some(x) = queue.pop_front() {
            for &y in q.neighbors(x) {
                if members[y as usize] && comp[y as usize] == usize::MAX {
                    comp[y as usize] = id;
                    list.push(y);
                    queue.push_back(y);
                }
            }
        }
        out.push(list);
    }
    out
}

/// Shortest path in `q` from any vertex of `from` to any vertex of `to`.
fn shortest_path(q: &QueryGraph, from: &[VertexId], to: &[VertexId]) -> Option<Vec<VertexId>> {
    let n = q.vertex_count();
    let mut is_target = vec![false; n];
    for &t in to {
        is_target[t as usize] = true;
    }
    let mut parent = vec![u32::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in from {
        seen[s as usize] = true;
        queue.push_back(s);
    }
    while let Some(x) = queue.pop_front() {
        if is_target[x as usize] {
            let mut path = vec![x];
            let mut cur = x;
            while parent[cur as usize] != u32::MAX {
                cur = parent[cur as usize];
                path.push(cur);
            }
            return Some(path);
        }
        for &y in q.neighbors(x) {
            if !seen[y as usize] {
                seen[y as usize] = true;
                parent[y as usize] = x;
                queue.push_back(y);
            }
        }
    }
    None
}

/// Connects the chosen set inside `q`, repeatedly adding the shortest path
/// between the closest pair of components.
fn connect(q: &QueryGraph, chosen: &mut [bool]) {
    loop {
        let comps = components(q, chosen);
        if comps.len() <= 1 {
            return;
        }
        let mut best: Option<Vec<VertexId>> = None;
        for i in 0..comps.len() {
            for j in i + 1..comps.len() {
                let path = shortest_path(q, &comps[i], &comps[j]).expect("query is connected");
                if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                    best = Some(path);
                }
            }
        }
        for u in best.unwrap() {
            chosen[u as usize] = true;
        }
    }
}

/// Greedy conditional kernel set for seed edge `(uk, ul)`.
pub fn greedy_cks(q: &QueryGraph, uk: VertexId, ul: VertexId) -> Result<KernelShellPlan, PlanError> {
    check_seed(q, uk, ul)?;
    let n = q.vertex_count();
    let mut chosen = vec![false; n];
    let mut alive = vec![true; n];
    for u in [uk, ul] {
        chosen[u as usize] = true;
        alive[u as usize] = false;
    }
    while let Some(cycle) = find_odd_cycle(q, &alive) {
        for u in cycle {
            chosen[u as usize] = true;
            alive[u as usize] = false;
        }
    }
    for u in bipartite_cover(q, &alive) {
        chosen[u as usize] = true;
    }
    connect(q, &mut chosen);
    Ok(plan_from_set(q, (uk, ul), &chosen))
}

/// Minimum conditional kernel set by exhaustive search over vertex subsets.
/// Among minimum sets the lexicographically smallest one wins.
pub fn exact_mcks(q: &QueryGraph, uk: VertexId, ul: VertexId) -> Result<KernelShellPlan, PlanError> {
    let n = q.vertex_count();
    if n > EXACT_MAX_VERTICES {
        return Err(PlanError::TooLarge(n));
    }
    check_seed(q, uk, ul)?;
    let rest: Vec<VertexId> = q.vertices().filter(|&u| u != uk && u != ul).collect();
    let edges: Vec<(VertexId, VertexId)> = q.edges().collect();
    for extra in 0..=rest.len() {
        let mut found = None;
        for_each_combination(rest.len(), extra, |pick| {
            let mut chosen = vec![false; n];
            chosen[uk as usize] = true;
            chosen[ul as usize] = true;
            for &i in pick {
                chosen[rest[i] as usize] = true;
            }
            let covers = edges.iter().all(|&(a, b)| chosen[a as usize] || chosen[b as usize]);
            if covers && components(q, &chosen).len() == 1 {
                found = Some(chosen);
                true
            } else {
                false
            }
        });
        if let Some(chosen) = found {
            return Ok(plan_from_set(q, (uk, ul), &chosen));
        }
    }
    unreachable!("the full vertex set is always a connected cover")
}

/// Visits k-subsets of `0..n` in lexicographic order until `f` returns true.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if f(&idx) {
            return;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// One greedy plan per undirected query edge.
pub fn precompute_all(q: &QueryGraph) -> PlanMap {
    let edges: Vec<(VertexId, VertexId)> = q.edges().collect();
    #[cfg(feature = "parallel")]
    let plans: Vec<KernelShellPlan> = {
        use rayon::prelude::*;
        edges
            .par_iter()
            .map(|&(a, b)| greedy_cks(q, a, b).expect("edge from query"))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let plans: Vec<KernelShellPlan> = edges
        .iter()
        .map(|&(a, b)| greedy_cks(q, a, b).expect("edge from query"))
        .collect();
    edges.into_iter().zip(plans).collect()
}
