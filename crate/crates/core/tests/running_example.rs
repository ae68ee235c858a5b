//! The four-vertex query and seven-vertex data graph in `fixtures/`, with the
//! stream `- 4 6`, `+ 2 6`.

use std::time::Instant;

use csm_core::graph::{load_graph, load_update_stream, LabelTable};
use csm_core::index::{CaligIndex, IndexOptions, LightState};
use csm_core::matching::has_injective_matching;
use csm_core::oracle::{diff_snapshots, enumerate_static, exhaustive_injective};
use csm_core::search::{find_incremental_matches, SearchConfig, SearchCounters};
use csm_core::{run_session, verify_session, LabeledGraph, QueryGraph, SessionConfig, UpdateOp, VerifyOptions};

const QUERY: &str = include_str!("../../../fixtures/query.graph");
const DATA: &str = include_str!("../../../fixtures/data.graph");
const STREAM: &str = include_str!("../../../fixtures/stream.txt");

fn load() -> (QueryGraph, LabeledGraph, Vec<UpdateOp>) {
    let mut table = LabelTable::new();
    let q = QueryGraph::new(load_graph(QUERY, &mut table).unwrap()).unwrap();
    let g = load_graph(DATA, &mut table).unwrap();
    let s = load_update_stream(STREAM, g.vertex_count()).unwrap();
    (q, g, s)
}

fn on_set(idx: &CaligIndex) -> Vec<(u32, u32)> {
    idx.states()
        .into_iter()
        .filter(|(_, s)| *s == LightState::On)
        .map(|(p, _)| p)
        .collect()
}

#[test]
fn construction_has_ten_nodes() {
    let (q, g, _) = load();
    let idx = CaligIndex::build(&q, &g, IndexOptions::default());
    assert_eq!(idx.node_count(), 10);
    assert_eq!(idx.on_count(), 10);
}

#[test]
fn bigraphs_of_u1() {
    let (q, g, _) = load();
    let idx = CaligIndex::build(&q, &g, IndexOptions::default());
    let b6 = idx.bigraph(idx.node(1, 6).unwrap());
    let b4 = idx.bigraph(idx.node(1, 4).unwrap());
    assert!(!has_injective_matching(&b6));
    assert!(!exhaustive_injective(&b6).unwrap());
    assert!(has_injective_matching(&b4));
    assert!(exhaustive_injective(&b4).unwrap());
}

#[test]
fn initialization_rounds() {
    let (q, g, _) = load();
    let fresh = CaligIndex::build(&q, &g, IndexOptions::default());
    let mut first_round: Vec<(u32, u32)> = fresh
        .states()
        .into_iter()
        .map(|(p, _)| p)
        .filter(|&(u, v)| !has_injective_matching(&fresh.bigraph(fresh.node(u, v).unwrap())))
        .collect();
    first_round.sort();
    assert_eq!(first_round, vec![(1, 5), (1, 6), (2, 0)]);

    let mut idx = fresh.clone();
    let log = idx.initialize();
    let mut off: Vec<(u32, u32)> = log.iter().map(|c| (c.query, c.data)).collect();
    assert!(log.iter().all(|c| c.to == LightState::Off));
    off.sort();
    let mut second_round: Vec<_> = off.iter().copied().filter(|p| !first_round.contains(p)).collect();
    second_round.sort();
    assert_eq!(second_round, vec![(2, 2), (3, 4), (3, 5)]);

    assert_eq!(on_set(&idx), vec![(0, 3), (1, 4), (2, 1), (3, 6)]);
    assert!(idx.invariant_violations(&g).is_empty());
}

#[test]
fn one_match_before_updates() {
    let (q, g, _) = load();
    let snap = enumerate_static(&q, &g).unwrap();
    assert_eq!(snap.matches.into_iter().collect::<Vec<_>>(), vec![vec![3, 4, 1, 6]]);
}

#[test]
fn deletion_turns_everything_off() {
    let (q, mut g, _) = load();
    let mut idx = CaligIndex::construct(&q, &g, IndexOptions::default());
    let plans = csm_core::plan::precompute_all(&q);
    let mut counters = SearchCounters::default();
    let removed = find_incremental_matches(&idx, 4, 6, &plans, SearchConfig::default(), &mut counters);
    assert_eq!(removed.matches, vec![vec![3, 4, 1, 6]]);

    g.remove_edge(4, 6).unwrap();
    idx.update_for_deletion(4, 6);
    assert_eq!(idx.on_count(), 0);
    assert_eq!(idx.states(), CaligIndex::construct(&q, &g, IndexOptions::default()).states());
}

#[test]
fn addition_lights_the_new_match() {
    let (q, mut g, _) = load();
    g.remove_edge(4, 6).unwrap();
    let mut idx = CaligIndex::construct(&q, &g, IndexOptions::default());
    assert_eq!(idx.on_count(), 0);

    g.add_edge(2, 6).unwrap();
    let log = idx.update_for_addition(2, 6);
    assert_eq!((log[0].query, log[0].data, log[0].to), (2, 2, LightState::On));
    for p in [(0, 3), (3, 5)] {
        assert!(log.iter().any(|c| (c.query, c.data) == p && c.to == LightState::On));
    }
    assert_eq!(idx.state(2, 1), Some(LightState::Off));
    assert_eq!(on_set(&idx), vec![(0, 3), (1, 6), (2, 2), (3, 5)]);
    assert_eq!(idx.states(), CaligIndex::construct(&q, &g, IndexOptions::default()).states());

    // partial {u1 -> v6, u2 -> v2} leaves only v3 for u0
    let mut m = csm_core::search::PartialMatch::new(4);
    m.assign(1, 6);
    m.assign(2, 2);
    assert_eq!(csm_core::search::generate_candidates(0, &m, &q, &idx), vec![3]);

    let plans = csm_core::plan::precompute_all(&q);
    let mut counters = SearchCounters::default();
    let added = find_incremental_matches(&idx, 2, 6, &plans, SearchConfig::default(), &mut counters);
    assert_eq!(added.matches, vec![vec![3, 6, 2, 5]]);
}

#[test]
fn oracle_diffs_agree() {
    let (q, mut g, _) = load();
    let s0 = enumerate_static(&q, &g).unwrap();
    g.remove_edge(4, 6).unwrap();
    let s1 = enumerate_static(&q, &g).unwrap();
    g.add_edge(2, 6).unwrap();
    let s2 = enumerate_static(&q, &g).unwrap();
    assert_eq!(diff_snapshots(&s0, &s1), (vec![], vec![vec![3, 4, 1, 6]]));
    assert_eq!(diff_snapshots(&s1, &s2), (vec![vec![3, 6, 2, 5]], vec![]));
    assert_eq!(diff_snapshots(&s2, &s2), (vec![], vec![]));
}

#[test]
fn session_reports_one_removed_then_one_added() {
    let start = Instant::now();
    let (q, g, s) = load();
    let out = run_session(q.clone(), g.clone(), &s, SessionConfig::default());
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert_eq!(out.match_text(), "m - 3 4 1 6\nm + 3 6 2 5\n");
    assert_eq!(out.metrics.matches_removed, 1);
    assert_eq!(out.metrics.matches_added, 1);
    assert!(out.metrics.completed);

    let verdict = verify_session(q, g, &s, SessionConfig::default(), VerifyOptions {
        rebuild_every: Some(1),
        rebuild_offset: 0,
    })
    .unwrap();
    assert!(verdict.passed(), "{verdict}");
}

#[test]
fn empty_stream_is_quiet() {
    let (q, g, _) = load();
    let out = run_session(q, g, &[], SessionConfig::default());
    assert!(out.matches.is_empty());
    assert_eq!(out.metrics.backtrackings, 0);
    assert!(out.metrics.completed);
    assert_eq!(out.metrics.match_density.to_string(), "inf");
}
