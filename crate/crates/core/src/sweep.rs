//! Batches of independent seeded sessions. With the `parallel` feature the
//! sessions are spread over a rayon pool; each one still runs single-threaded.

use serde::Serialize;

use crate::generate::{random_session, SessionParams};
use crate::oracle::OracleError;
use crate::session::{run_session, verify_session, MatchDensity, SessionConfig, Verdict, VerifyOptions};

/// Maps `f` over `seeds` in order, in parallel when the feature is enabled.
pub fn map_seeds<T, F>(seeds: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| f(s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_seeds_sequential(seeds, f)
    }
}

pub fn map_seeds_sequential<T, F: Fn(u64) -> T>(seeds: &[u64], f: F) -> Vec<T> {
    seeds.iter().map(|&s| f(s)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionSummary {
    pub seed: u64,
    pub completed: bool,
    pub elapsed_us: u64,
    pub maintenance_us: u64,
    pub search_us: u64,
    pub matches: u64,
    pub backtrackings: u64,
    pub match_density: MatchDensity,
    pub peak_memory_bytes: Option<u64>,
}

pub fn run_one(seed: u64, params: &SessionParams, config: SessionConfig) -> SessionSummary {
    let inst = random_session(seed, params);
    let out = run_session(inst.query, inst.data, &inst.stream, config);
    let m = out.metrics;
    SessionSummary {
        seed,
        completed: m.completed,
        elapsed_us: m.elapsed_us,
        maintenance_us: m.maintenance_us,
        search_us: m.search_us,
        matches: m.matches_added + m.matches_removed,
        backtrackings: m.backtrackings,
        match_density: m.match_density,
        peak_memory_bytes: m.peak_memory_bytes,
    }
}

pub fn run_sweep(seeds: &[u64], params: &SessionParams, config: SessionConfig) -> Vec<SessionSummary> {
    map_seeds(seeds, |s| run_one(s, params, config))
}

pub fn run_sweep_sequential(seeds: &[u64], params: &SessionParams, config: SessionConfig) -> Vec<SessionSummary> {
    map_seeds_sequential(seeds, |s| run_one(s, params, config))
}

/// Verifies each seeded session. When rebuild checks are sampled, each session
/// starts sampling at an offset derived from its seed.
pub fn verify_sweep(
    seeds: &[u64],
    params: &SessionParams,
    config: SessionConfig,
    options: VerifyOptions,
) -> Vec<(u64, Result<Verdict, OracleError>)> {
    map_seeds(seeds, |s| {
        let inst = random_session(s, params);
        let options = VerifyOptions {
            rebuild_offset: options.rebuild_every.map_or(0, |k| (s as usize) % k.max(1)),
            ..options
        };
        (s, verify_session(inst.query, inst.data, &inst.stream, config, options))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub sessions: usize,
    pub completed: usize,
    pub completion_rate: f64,
    /// Mean over every session, timed-out ones included.
    pub mean_elapsed_us_all: f64,
    /// Mean over completed sessions only.
    pub mean_elapsed_us_completed: Option<f64>,
    pub mean_peak_memory_bytes: Option<f64>,
    /// Geometric mean over sessions with finite, positive density.
    pub geo_mean_match_density: Option<f64>,
    pub maintenance_share: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(rows: &[SessionSummary]) -> SweepSummary {
    let completed = rows.iter().filter(|r| r.completed).count();
    let maint: u64 = rows.iter().map(|r| r.maintenance_us).sum();
    let search: u64 = rows.iter().map(|r| r.search_us).sum();
    SweepSummary {
        sessions: rows.len(),
        completed,
        completion_rate: if rows.is_empty() {
            0.0
        } else {
            completed as f64 / rows.len() as f64
        },
        mean_elapsed_us_all: mean(rows.iter().map(|r| r.elapsed_us as f64)).unwrap_or(0.0),
        mean_elapsed_us_completed: mean(rows.iter().filter(|r| r.completed).map(|r| r.elapsed_us as f64)),
        mean_peak_memory_bytes: mean(rows.iter().filter_map(|r| r.peak_memory_bytes.map(|b| b as f64))),
        geo_mean_match_density: mean(
            rows.iter()
                .map(|r| r.match_density.value())
                .filter(|x| x.is_finite() && *x > 0.0)
                .map(f64::ln),
        )
        .map(f64::exp),
        maintenance_share: (maint + search > 0).then(|| maint as f64 / (maint + search) as f64),
    }
}
