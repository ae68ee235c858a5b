//! Continuous subgraph matching over a stream of edge updates.
//!
//! A [`index::CaligIndex`] keeps a lighting state for every label-compatible
//! (query vertex, data vertex) pair and updates it locally as edges come and
//! go. For each update, [`search::find_incremental_matches`] enumerates the
//! matches that contain the changed edge by backtracking over a small
//! connected kernel of the query and joining the remaining shell vertices.

pub mod engine;
pub mod generate;
pub mod graph;
pub mod index;
pub mod matching;
pub mod memory;
pub mod oracle;
pub mod plan;
pub mod search;
pub mod session;
pub mod sweep;

pub use engine::{Engine, EngineConfig, UpdateOutcome, UpdateStatus};
pub use graph::{LabelTable, LabeledGraph, OpKind, QueryGraph, UpdateOp, VertexId};
pub use index::{CaligIndex, IndexOptions, LightState, StateRule};
pub use search::{MatchSet, SearchConfig, SearchCounters, SearchStrategy};
pub use session::{run_session, verify_session, RunMetrics, SessionConfig, SessionOutput, Verdict, VerifyOptions};
