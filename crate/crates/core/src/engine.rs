//! One query over one evolving data graph: the index, the per-edge plans and
//! the order in which maintenance and search run for each update.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::graph::{LabeledGraph, OpKind, QueryGraph, UpdateError, UpdateOp};
use crate::index::{CaligIndex, IndexOptions};
use crate::plan::{precompute_all, PlanMap};
use crate::search::{find_incremental_matches, MatchSet, SearchConfig, SearchCounters};

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct EngineConfig {
    pub index: IndexOptions,
    pub search: SearchConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UpdateStatus {
    Applied,
    /// The op did not fit the current graph and left everything untouched.
    Skipped(UpdateError),
}

#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub op: UpdateOp,
    pub status: UpdateStatus,
    /// Matches gained for an addition, lost for a deletion.
    pub matches: MatchSet,
    pub counters: SearchCounters,
    pub maintenance: Duration,
    pub search: Duration,
    pub total: Duration,
    pub state_changes: usize,
}

#[derive(Debug, Clone)]
pub struct Engine {
    query: QueryGraph,
    data: LabeledGraph,
    index: CaligIndex,
    plans: PlanMap,
    config: EngineConfig,
}

impl Engine {
    /// Offline phase: builds and initializes the index and all plans.
    pub fn new(query: QueryGraph, data: LabeledGraph, config: EngineConfig) -> Self {
        let index = CaligIndex::construct(&query, &data, config.index);
        let plans = precompute_all(&query);
        Engine {
            query,
            data,
            index,
            plans,
            config,
        }
    }

    pub fn query(&self) -> &QueryGraph {
        &self.query
    }

    pub fn data(&self) -> &LabeledGraph {
        &self.data
    }

    pub fn index(&self) -> &CaligIndex {
        &self.index
    }

    pub fn plans(&self) -> &PlanMap {
        &self.plans
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    /// Applies one update. Additions update the index before searching,
    /// deletions search before the edge disappears from the index.
    pub fn process(&mut self, op: UpdateOp, deadline: Option<Instant>) -> UpdateOutcome {
        let start = Instant::now();
        let mut outcome = UpdateOutcome {
            op,
            status: UpdateStatus::Applied,
            matches: MatchSet {
                complete: true,
                ..Default::default()
            },
            counters: SearchCounters::default(),
            maintenance: Duration::ZERO,
            search: Duration::ZERO,
            total: Duration::ZERO,
            state_changes: 0,
        };
        if let Err(e) = self.data.check_update(op) {
            outcome.status = UpdateStatus::Skipped(e);
            outcome.total = start.elapsed();
            return outcome;
        }
        let search_config = SearchConfig {
            deadline,
            ..self.config.search
        };
        let (v1, v2) = (op.src, op.dst);
        match op.kind {
            OpKind::Add => {
                let t = Instant::now();
                self.data.add_edge(v1, v2).expect("checked");
                outcome.state_changes = self.index.update_for_addition(v1, v2).len();
                outcome.maintenance = t.elapsed();
                let t = Instant::now();
                outcome.matches =
                    find_incremental_matches(&self.index, v1, v2, &self.plans, search_config, &mut outcome.counters);
                outcome.search = t.elapsed();
            }
            OpKind::Delete => {
                let t = Instant::now();
                outcome.matches =
                    find_incremental_matches(&self.index, v1, v2, &self.plans, search_config, &mut outcome.counters);
                outcome.search = t.elapsed();
                let t = Instant::now();
                self.data.remove_edge(v1, v2).expect("checked");
                outcome.state_changes = self.index.update_for_deletion(v1, v2).len();
                outcome.maintenance = t.elapsed();
            }
        }
        outcome.total = start.elapsed();
        outcome
    }
}
