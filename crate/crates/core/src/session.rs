//! Running a whole update stream, collecting metrics, and checking a run
//! against the brute-force oracle.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::engine::{Engine, EngineConfig, UpdateStatus};
use crate::graph::{LabeledGraph, OpKind, QueryGraph, UpdateOp, VertexId};
use crate::index::CaligIndex;
use crate::memory::peak_memory_bytes;
use crate::oracle::{diff_snapshots, enumerate_static, OracleError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(20 * 60);

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SessionConfig {
    pub engine: EngineConfig,
    /// Budget for the whole online phase.
    pub timeout: Duration,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            engine: EngineConfig::default(),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

/// Matches per backtracking, infinite when nothing was backtracked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchDensity {
    Finite(f64),
    Infinite,
}

impl MatchDensity {
    pub fn new(matches: u64, backtrackings: u64) -> Self {
        if backtrackings == 0 {
            MatchDensity::Infinite
        } else {
            MatchDensity::Finite(matches as f64 / backtrackings as f64)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            MatchDensity::Finite(x) => x,
            MatchDensity::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for MatchDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchDensity::Finite(x) => write!(f, "{x}"),
            MatchDensity::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for MatchDensity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MatchDensity::Finite(x) => s.serialize_f64(*x),
            MatchDensity::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UpdateRow {
    pub op_index: usize,
    pub kind: char,
    pub src: VertexId,
    pub dst: VertexId,
    pub maint_us: u64,
    pub search_us: u64,
    pub total_us: u64,
    pub added: u64,
    pub removed: u64,
    pub backtracks: u64,
    pub matches_emitted: u64,
    pub state_changes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub complete: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub offline_us: u64,
    /// Offline plus online wall time.
    pub elapsed_us: u64,
    pub maintenance_us: u64,
    pub search_us: u64,
    pub matches_added: u64,
    pub matches_removed: u64,
    pub backtrackings: u64,
    pub matches_emitted: u64,
    pub match_density: MatchDensity,
    pub peak_memory_bytes: Option<u64>,
    pub completed: bool,
    pub updates_total: usize,
    pub updates_applied: usize,
    pub updates_skipped: usize,
    /// Update during which the budget ran out.
    pub timed_out_at: Option<usize>,
}

/// One line of match output: `m <sign> v(u0) v(u1) ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchLine {
    pub op_index: usize,
    pub kind: OpKind,
    pub assignment: Vec<VertexId>,
}

impl fmt::Display for MatchLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_match_line(f, self.kind, &self.assignment)
    }
}

pub fn write_match_line(out: &mut impl fmt::Write, kind: OpKind, assignment: &[VertexId]) -> fmt::Result {
    write!(out, "m {}", kind.symbol())?;
    for v in assignment {
        write!(out, " {v}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionOutput {
    pub metrics: RunMetrics,
    pub rows: Vec<UpdateRow>,
    pub matches: Vec<MatchLine>,
}

impl SessionOutput {
    /// Match lines, one per line, in emission order.
    pub fn match_text(&self) -> String {
        let mut out = String::new();
        for m in &self.matches {
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }

    /// Everything that must repeat exactly across replays: match lines and
    /// per-update counters, without timings or memory.
    pub fn deterministic_text(&self) -> String {
        use fmt::Write as _;
        let mut out = self.match_text();
        for r in &self.rows {
            writeln!(
                out,
                "u {} {} {} {} +{} -{} bt={} em={} sc={} ok={}",
                r.op_index, r.kind, r.src, r.dst, r.added, r.removed, r.backtracks, r.matches_emitted,
                r.state_changes, r.complete
            )
            .unwrap();
        }
        let m = &self.metrics;
        writeln!(
            out,
            "total +{} -{} bt={} em={} md={} completed={}",
            m.matches_added, m.matches_removed, m.backtrackings, m.matches_emitted, m.match_density, m.completed
        )
        .unwrap();
        out
    }
}

fn micros(d: Duration) -> u64 {
    d.as_micros().min(u64::MAX as u128) as u64
}

/// Runs the offline phase and then every update of `stream` in order.
pub fn run_session(query: QueryGraph, data: LabeledGraph, stream: &[UpdateOp], config: SessionConfig) -> SessionOutput {
    let start = Instant::now();
    let mut engine = Engine::new(query, data, config.engine);
    let offline = start.elapsed();
    let deadline = Instant::now().checked_add(config.timeout);

    let mut rows = Vec::with_capacity(stream.len());
    let mut matches = Vec::new();
    let mut timed_out_at = None;
    for (i, &op) in stream.iter().enumerate() {
        let outcome = engine.process(op, deadline);
        let n = outcome.matches.count;
        let (added, removed) = match op.kind {
            OpKind::Add => (n, 0),
            OpKind::Delete => (0, n),
        };
        for a in &outcome.matches.matches {
            matches.push(MatchLine {
                op_index: i,
                kind: op.kind,
                assignment: a.clone(),
            });
        }
        rows.push(UpdateRow {
            op_index: i,
            kind: op.kind.symbol(),
            src: op.src,
            dst: op.dst,
            maint_us: micros(outcome.maintenance),
            search_us: micros(outcome.search),
            total_us: micros(outcome.total),
            added,
            removed,
            backtracks: outcome.counters.backtrackings,
            matches_emitted: outcome.counters.matches_emitted,
            state_changes: outcome.state_changes,
            skipped: match &outcome.status {
                UpdateStatus::Applied => None,
                UpdateStatus::Skipped(e) => Some(e.to_string()),
            },
            complete: outcome.matches.complete,
        });
        if outcome.counters.timed_out {
            timed_out_at = Some(i);
            break;
        }
    }

    let sum = |f: fn(&UpdateRow) -> u64| rows.iter().map(f).sum::<u64>();
    let backtrackings = sum(|r| r.backtracks);
    let matches_emitted = sum(|r| r.matches_emitted);
    let updates_skipped = rows.iter().filter(|r| r.skipped.is_some()).count();
    let metrics = RunMetrics {
        offline_us: micros(offline),
        elapsed_us: micros(start.elapsed()),
        maintenance_us: sum(|r| r.maint_us),
        search_us: sum(|r| r.search_us),
        matches_added: sum(|r| r.added),
        matches_removed: sum(|r| r.removed),
        backtrackings,
        matches_emitted,
        match_density: MatchDensity::new(matches_emitted, backtrackings),
        peak_memory_bytes: peak_memory_bytes(),
        completed: timed_out_at.is_none(),
        updates_total: stream.len(),
        updates_applied: rows.len() - updates_skipped,
        updates_skipped,
        timed_out_at,
    };
    SessionOutput { metrics, rows, matches }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub op_index: usize,
    pub op: UpdateOp,
    pub expected: Vec<Vec<VertexId>>,
    pub actual: Vec<Vec<VertexId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RebuildMismatch {
    pub op_index: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub updates_checked: usize,
    pub rebuild_checks: usize,
    pub mismatches: Vec<Mismatch>,
    pub rebuild_mismatches: Vec<RebuildMismatch>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.rebuild_mismatches.is_empty()
    }

    /// Index of the first update whose matches or states diverged.
    pub fn first_divergence(&self) -> Option<usize> {
        let a = self.mismatches.first().map(|m| m.op_index);
        let b = self.rebuild_mismatches.first().map(|m| m.op_index);
        a.into_iter().chain(b).min()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(
                f,
                "PASS ({} updates, {} rebuild checks)",
                self.updates_checked, self.rebuild_checks
            );
        }
        write!(f, "FAIL")?;
        if let Some(i) = self.first_divergence() {
            write!(f, " at update {i}")?;
        }
        for m in &self.mismatches {
            write!(f, "\n  update {} ({}): expected {:?}, engine {:?}", m.op_index, m.op, m.expected, m.actual)?;
        }
        for m in &self.rebuild_mismatches {
            write!(f, "\n  update {}: {}", m.op_index, m.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Compare lighting states with a fresh rebuild after every k-th update.
    pub rebuild_every: Option<usize>,
    /// Offset of the first sampled update, below `rebuild_every`.
    pub rebuild_offset: usize,
}

/// Replays `stream` in enumeration mode and checks every update against the
/// oracle's before/after difference.
pub fn verify_session(
    query: QueryGraph,
    data: LabeledGraph,
    stream: &[UpdateOp],
    config: SessionConfig,
    options: VerifyOptions,
) -> Result<Verdict, OracleError> {
    let mut before = enumerate_static(&query, &data)?;
    let mut engine_config = config.engine;
    engine_config.search.count_only = false;
    engine_config.search.max_matches = None;
    let mut engine = Engine::new(query.clone(), data, engine_config);
    let mut verdict = Verdict::default();

    for (i, &op) in stream.iter().enumerate() {
        let outcome = engine.process(op, None);
        verdict.updates_checked += 1;
        let actual = outcome.matches.matches;
        let expected = if outcome.status == UpdateStatus::Applied {
            let after = enumerate_static(&query, engine.data())?;
            let (added, removed) = diff_snapshots(&before, &after);
            before = after;
            match op.kind {
                OpKind::Add if removed.is_empty() => added,
                OpKind::Delete if added.is_empty() => removed,
                // an update cannot both add and remove; report everything
                _ => [added, removed].concat(),
            }
        } else {
            Vec::new()
        };
        if expected != actual {
            verdict.mismatches.push(Mismatch {
                op_index: i,
                op,
                expected,
                actual,
            });
        }

        if let Some(k) = options.rebuild_every.filter(|&k| k > 0) {
            if i % k == options.rebuild_offset % k {
                verdict.rebuild_checks += 1;
                let fresh = CaligIndex::construct(&query, engine.data(), engine_config.index);
                let ours = engine.index().states();
                let theirs = fresh.states();
                if ours != theirs {
                    let diff: Vec<String> = ours
                        .iter()
                        .zip(&theirs)
                        .filter(|(a, b)| a != b)
                        .map(|(a, b)| format!("({},{}) {} vs rebuilt {}", a.0 .0, a.0 .1, a.1.as_str(), b.1.as_str()))
                        .collect();
                    verdict.rebuild_mismatches.push(RebuildMismatch {
                        op_index: i,
                        detail: format!("lighting states differ: {}", diff.join(", ")),
                    });
                }
                let broken = engine.index().invariant_violations(engine.data());
                if !broken.is_empty() {
                    verdict.rebuild_mismatches.push(RebuildMismatch {
                        op_index: i,
                        detail: format!("index invariants broken: {}", broken.join("; ")),
                    });
                }
            }
        }
    }
    Ok(verdict)
}
