//! JSON and CSV renderings of a session report.

use anyhow::Result;
use csm_core::session::{SessionConfig, SessionOutput};
use csm_core::sweep::{SessionSummary, SweepSummary};
use serde::Serialize;
use serde_json::json;

pub const SCHEMA: u32 = 1;

pub fn json(out: &SessionOutput, config: &SessionConfig) -> String {
    let command: Vec<String> = std::env::args().collect();
    let doc = json!({
        "schema": SCHEMA,
        "command": command,
        "config": config,
        "metrics": out.metrics,
        "updates": out.rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

#[derive(Serialize)]
struct CsvRow {
    op_index: usize,
    kind: char,
    src: u32,
    dst: u32,
    maint_us: u64,
    search_us: u64,
    added: u64,
    removed: u64,
    backtracks: u64,
}

pub fn csv(out: &SessionOutput) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &out.rows {
        w.serialize(CsvRow {
            op_index: r.op_index,
            kind: r.kind,
            src: r.src,
            dst: r.dst,
            maint_us: r.maint_us,
            search_us: r.search_us,
            added: r.added,
            removed: r.removed,
            backtracks: r.backtracks,
        })?;
    }
    if out.rows.is_empty() {
        w.write_record(["op_index", "kind", "src", "dst", "maint_us", "search_us", "added", "removed", "backtracks"])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn sweep_json(summary: &SweepSummary, rows: &[SessionSummary]) -> String {
    let doc = json!({
        "schema": SCHEMA,
        "command": std::env::args().collect::<Vec<_>>(),
        "summary": summary,
        "sessions": rows,
    });
    serde_json::to_string_pretty(&doc).expect("report serializes")
}
