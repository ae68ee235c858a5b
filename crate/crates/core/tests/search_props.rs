use std::collections::BTreeSet;

use csm_core::generate::{random_session, rng_for, SessionParams};
use csm_core::graph::{LabeledGraph, OpKind, VertexId};
use csm_core::index::{CaligIndex, IndexOptions};
use csm_core::oracle::{diff_snapshots, enumerate_static};
use csm_core::plan::precompute_all;
use csm_core::search::{
    find_incremental_matches, generate_candidates, join_count, join_shell, PartialMatch, SearchConfig,
    SearchCounters,
};
use csm_core::QueryGraph;
use proptest::prelude::*;
use rand::Rng;

fn k4_minus(a: VertexId, b: VertexId) -> LabeledGraph {
    let edges = (0..4u32)
        .flat_map(|x| (x + 1..4).map(move |y| (x, y)))
        .filter(|&e| e != (a.min(b), a.max(b)));
    LabeledGraph::from_edges(vec![0; 4], edges).unwrap()
}

#[test]
fn triangle_on_k4() {
    let tri = QueryGraph::new(LabeledGraph::from_edges(vec![0; 3], [(0, 1), (1, 2), (0, 2)]).unwrap()).unwrap();
    let plans = precompute_all(&tri);
    for (a, b) in [(0, 1), (1, 3), (2, 3)] {
        let mut g = k4_minus(a, b);
        let before = enumerate_static(&tri, &g).unwrap();
        let mut idx = CaligIndex::construct(&tri, &g, IndexOptions::default());
        g.add_edge(a, b).unwrap();
        idx.update_for_addition(a, b);
        let mut counters = SearchCounters::default();
        let added = find_incremental_matches(&idx, a, b, &plans, SearchConfig::default(), &mut counters);
        let (expected, _) = diff_snapshots(&before, &enumerate_static(&tri, &g).unwrap());
        assert_eq!(added.matches, expected);
        // two new triangles, each hit by all 6 orderings
        assert_eq!(added.matches.len(), 12);
        let sets: BTreeSet<Vec<VertexId>> = added
            .matches
            .iter()
            .map(|m| {
                let mut s = m.clone();
                s.sort();
                s
            })
            .collect();
        assert_eq!(sets.len(), 2);
    }
}

fn brute_join(cands: &[Vec<VertexId>]) -> u64 {
    let mut total = 0;
    let mut idx = vec![0usize; cands.len()];
    if cands.iter().any(Vec::is_empty) {
        return 0;
    }
    loop {
        let pick: Vec<VertexId> = idx.iter().zip(cands).map(|(&i, c)| c[i]).collect();
        let distinct: BTreeSet<_> = pick.iter().collect();
        if distinct.len() == pick.len() {
            total += 1;
        }
        let mut k = 0;
        loop {
            if k == cands.len() {
                return total;
            }
            idx[k] += 1;
            if idx[k] < cands[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

proptest! {
    #[test]
    fn join_count_matches_filtered_product(
        labels in prop::collection::vec(0u32..3, 0..5),
        seed in any::<u64>(),
    ) {
        let mut rng = rng_for(seed);
        // same-label vertices draw from overlapping pools
        let cands: Vec<Vec<VertexId>> = labels
            .iter()
            .map(|&l| {
                let mut c: Vec<VertexId> = (0..5).filter(|_| rng.gen_bool(0.5)).map(|x| l * 10 + x).collect();
                c.sort();
                c
            })
            .collect();
        prop_assert_eq!(join_count(&labels, &cands), brute_join(&cands));
        let shell: Vec<VertexId> = (0..labels.len() as VertexId).collect();
        let mut m = PartialMatch::new(labels.len());
        let mut emitted = Vec::new();
        join_shell(&mut m, &shell, &cands, false, &mut |pm| {
            emitted.push(pm.as_slice().to_vec());
            true
        });
        prop_assert_eq!(emitted.len() as u64, brute_join(&cands));
        let mut sorted = emitted.clone();
        sorted.sort();
        prop_assert_eq!(sorted, emitted);
    }
}

#[test]
fn matches_contain_the_update_edge_and_candidates_are_on() {
    let params = SessionParams::default();
    for seed in 0..150 {
        let inst = random_session(seed, &params);
        let q = &inst.query;
        let plans = precompute_all(q);
        let mut g = inst.data.clone();
        let mut idx = CaligIndex::construct(q, &g, IndexOptions::default());
        for &op in &inst.stream {
            if op.kind == OpKind::Add {
                g.add_edge(op.src, op.dst).unwrap();
                idx.update_for_addition(op.src, op.dst);
            }
            let mut counters = SearchCounters::default();
            let found = find_incremental_matches(&idx, op.src, op.dst, &plans, SearchConfig::default(), &mut counters);
            for m in &found.matches {
                let hit = q.edges().any(|(a, b)| {
                    let (x, y) = (m[a as usize], m[b as usize]);
                    (x, y) == (op.src, op.dst) || (y, x) == (op.src, op.dst)
                });
                assert!(hit, "seed {seed}: {m:?} misses {op}");
                // rebuild each prefix and check candidate generation stays inside the ON set
                for plan in plans.values() {
                    let mut pm = PartialMatch::new(q.vertex_count());
                    for &u in &plan.kernel {
                        if !pm.is_empty() && q.neighbors(u).iter().all(|&w| pm.get(w).is_none()) {
                            break;
                        }
                        if !pm.is_empty() {
                            let c = generate_candidates(u, &pm, q, &idx);
                            let on = idx.candidates(u);
                            assert!(c.iter().all(|v| on.contains(v)));
                        }
                        if pm.is_used(m[u as usize]) {
                            break;
                        }
                        pm.assign(u, m[u as usize]);
                    }
                }
            }
            assert_eq!(counters.matches_emitted, found.count);
            if op.kind == OpKind::Delete {
                g.remove_edge(op.src, op.dst).unwrap();
                idx.update_for_deletion(op.src, op.dst);
            }
        }
    }
}

#[test]
fn match_limit_truncates() {
    let params = SessionParams::default();
    let mut truncated = 0;
    for seed in 0..200 {
        let inst = random_session(seed, &params);
        let plans = precompute_all(&inst.query);
        let mut g = inst.data.clone();
        let mut idx = CaligIndex::construct(&inst.query, &g, IndexOptions::default());
        for &op in inst.stream.iter().filter(|o| o.kind == OpKind::Add) {
            if g.add_edge(op.src, op.dst).is_err() {
                continue;
            }
            idx.update_for_addition(op.src, op.dst);
            let cfg = SearchConfig {
                max_matches: Some(1),
                ..Default::default()
            };
            let mut counters = SearchCounters::default();
            let found = find_incremental_matches(&idx, op.src, op.dst, &plans, cfg, &mut counters);
            assert!(found.matches.len() <= 1);
            if counters.truncated {
                assert!(!found.complete);
                truncated += 1;
            }
        }
    }
    assert!(truncated > 0);
}

#[test]
fn expired_deadline_reports_incomplete() {
    let params = SessionParams::default();
    let inst = (0..)
        .map(|s| random_session(s, &params))
        .find(|i| enumerate_static(&i.query, &i.data).unwrap().matches.len() > 2)
        .unwrap();
    let snap = enumerate_static(&inst.query, &inst.data).unwrap();
    let m = snap.matches.iter().next().unwrap();
    let (a, b) = inst.query.edges().next().unwrap();
    let (v1, v2) = (m[a as usize], m[b as usize]);
    let idx = CaligIndex::construct(&inst.query, &inst.data, IndexOptions::default());
    let cfg = SearchConfig {
        deadline: Some(std::time::Instant::now()),
        ..Default::default()
    };
    let mut counters = SearchCounters::default();
    let found = find_incremental_matches(&idx, v1, v2, &precompute_all(&inst.query), cfg, &mut counters);
    assert!(counters.timed_out);
    assert!(!found.complete);
}
