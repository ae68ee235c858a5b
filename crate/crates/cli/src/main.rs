use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use csm_core::generate::{random_session, SessionParams};
use csm_core::graph::{load_graph, load_update_stream, write_update_stream, GraphError, LabelTable};
use csm_core::index::{CaligIndex, IndexOptions, StateRule};
use csm_core::oracle::{diff_snapshots, enumerate_static};
use csm_core::plan::{exact_mcks, precompute_all, EXACT_MAX_VERTICES};
use csm_core::search::{SearchConfig, SearchStrategy};
use csm_core::session::{run_session, verify_session, write_match_line, SessionConfig, VerifyOptions};
use csm_core::sweep::{run_sweep, run_sweep_sequential, summarize, verify_sweep};
use csm_core::{EngineConfig, LabeledGraph, OpKind, QueryGraph, UpdateOp};

mod report;

const EXIT_PARSE: u8 = 2;
const EXIT_VERIFY_FAIL: u8 = 3;
const EXIT_TIMEOUT: u8 = 4;

#[derive(Parser)]
#[command(name = "csm", version, about = "Continuous subgraph matching over edge streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a stream and print incremental matches.
    Run(RunArgs),
    /// Check every update of a stream against the brute-force oracle.
    Verify(VerifyArgs),
    /// Print the index after the offline phase (and after the stream, if given).
    DumpIndex(InputArgs),
    /// Print the kernel/shell plan of every query edge.
    DumpPlans(DumpPlansArgs),
    /// Print the oracle's incremental matches in the same format as `run`.
    OracleDiff(InputArgs),
    /// Run many seeded random sessions and print a JSON summary.
    Sweep(SweepArgs),
    /// Write a seeded random session as graph and stream files.
    Generate(GenerateArgs),
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Data graph file.
    #[arg(long, requires = "query")]
    data: Option<PathBuf>,
    /// Query graph file.
    #[arg(long, requires = "data")]
    query: Option<PathBuf>,
    /// Update stream file; empty when omitted.
    #[arg(long, requires = "data")]
    stream: Option<PathBuf>,
    /// Generate a random session from this seed instead of reading files.
    #[arg(long, conflicts_with = "data")]
    seed: Option<u64>,
}

#[derive(Args, Clone, Copy)]
struct Ablations {
    /// Keep a node ON when every query neighbor has some candidate.
    #[arg(long)]
    no_injm: bool,
    /// Never change lighting states.
    #[arg(long)]
    no_nstate: bool,
    /// Backtrack over every query vertex instead of joining the shell.
    #[arg(long)]
    no_kss: bool,
    /// Cache saturating matchings between checks.
    #[arg(long)]
    cache_im: bool,
}

impl Ablations {
    fn engine(self) -> EngineConfig {
        EngineConfig {
            index: IndexOptions {
                rule: if self.no_injm {
                    StateRule::NeighborOnly
                } else {
                    StateRule::Injective
                },
                frozen_states: self.no_nstate,
                cache_matching: self.cache_im,
            },
            search: SearchConfig {
                strategy: if self.no_kss {
                    SearchStrategy::OneByOne
                } else {
                    SearchStrategy::KernelShell
                },
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Count,
    Enumerate,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    ablations: Ablations,
    /// Budget for the whole stream.
    #[arg(long, default_value_t = 1200)]
    timeout_secs: u64,
    #[arg(long, value_enum, default_value = "enumerate")]
    mode: Mode,
    /// Stop each update's search after this many matches.
    #[arg(long)]
    max_matches: Option<u64>,
    /// Metrics report format.
    #[arg(long, value_enum)]
    report: Option<ReportFormat>,
    /// Write the report here instead of standard error.
    #[arg(long, requires = "report")]
    report_out: Option<PathBuf>,
    /// Print the index after the offline phase to standard error.
    #[arg(long)]
    dump_index: bool,
    /// Print the plans to standard error.
    #[arg(long)]
    dump_plans: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    ablations: Ablations,
    /// Also compare lighting states with a fresh rebuild every k updates.
    #[arg(long)]
    rebuild_every: Option<usize>,
}

#[derive(Args)]
struct DumpPlansArgs {
    #[arg(long)]
    query: PathBuf,
    /// Also print the minimum plan for each edge.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 100)]
    sessions: u64,
    #[arg(long, default_value_t = 0)]
    start_seed: u64,
    /// Check each session against the oracle instead of timing it.
    #[arg(long)]
    verify: bool,
    /// Run sessions one after another even when the pool is available.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    ablations: Ablations,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

struct Loaded {
    query: QueryGraph,
    data: LabeledGraph,
    stream: Vec<UpdateOp>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(input: &InputArgs) -> Result<Loaded> {
    if let Some(seed) = input.seed {
        let inst = random_session(seed, &SessionParams::default());
        return Ok(Loaded {
            query: inst.query,
            data: inst.data,
            stream: inst.stream,
        });
    }
    let (Some(data), Some(query)) = (&input.data, &input.query) else {
        bail!("either --data and --query or --seed is required");
    };
    let mut table = LabelTable::new();
    let q = load_graph(&read(query)?, &mut table).with_context(|| format!("in {}", query.display()))?;
    let query = QueryGraph::new(q).with_context(|| format!("in {}", query.display()))?;
    let data_graph = load_graph(&read(data)?, &mut table).with_context(|| format!("in {}", data.display()))?;
    let stream = match &input.stream {
        Some(p) => load_update_stream(&read(p)?, data_graph.vertex_count()).with_context(|| format!("in {}", p.display()))?,
        None => Vec::new(),
    };
    Ok(Loaded {
        query,
        data: data_graph,
        stream,
    })
}

fn print_plans(query: &QueryGraph, exact: bool, out: &mut impl Write) -> Result<()> {
    for plan in precompute_all(query).values() {
        writeln!(out, "{plan}")?;
        if exact {
            let (a, b) = plan.seed;
            writeln!(out, "exact {}", exact_mcks(query, a, b)?)?;
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let loaded = load(&args.input)?;
    let mut engine = args.ablations.engine();
    engine.search.count_only = matches!(args.mode, Mode::Count);
    engine.search.max_matches = args.max_matches;
    let config = SessionConfig {
        engine,
        timeout: Duration::from_secs(args.timeout_secs),
    };
    if args.dump_index {
        eprint!("{}", CaligIndex::construct(&loaded.query, &loaded.data, engine.index).dump());
    }
    if args.dump_plans {
        print_plans(&loaded.query, false, &mut io::stderr())?;
    }
    let out = run_session(loaded.query, loaded.data, &loaded.stream, config);
    let stdout = io::stdout();
    let mut w = io::BufWriter::new(stdout.lock());
    w.write_all(out.match_text().as_bytes())?;
    w.flush()?;
    if let Some(format) = args.report {
        let text = match format {
            ReportFormat::Json => report::json(&out, &config),
            ReportFormat::Csv => report::csv(&out)?,
        };
        match &args.report_out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
            None => eprint!("{text}"),
        }
    }
    for row in out.rows.iter().filter(|r| r.skipped.is_some()) {
        eprintln!(
            "warning: update {} ({} {} {}) skipped: {}",
            row.op_index,
            row.kind,
            row.src,
            row.dst,
            row.skipped.as_deref().unwrap_or_default()
        );
    }
    if !out.metrics.completed {
        eprintln!(
            "timeout: stopped during update {}",
            out.metrics.timed_out_at.unwrap_or_default()
        );
        return Ok(EXIT_TIMEOUT);
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let loaded = load(&args.input)?;
    let config = SessionConfig {
        engine: args.ablations.engine(),
        ..Default::default()
    };
    let options = VerifyOptions {
        rebuild_every: args.rebuild_every,
        rebuild_offset: 0,
    };
    let verdict = verify_session(loaded.query, loaded.data, &loaded.stream, config, options)?;
    println!("{verdict}");
    Ok(if verdict.passed() { 0 } else { EXIT_VERIFY_FAIL })
}

fn cmd_dump_index(input: InputArgs) -> Result<u8> {
    let loaded = load(&input)?;
    let mut data = loaded.data;
    let mut idx = CaligIndex::construct(&loaded.query, &data, IndexOptions::default());
    print!("{}", idx.dump());
    if !loaded.stream.is_empty() {
        for op in &loaded.stream {
            if data.apply_update(*op).is_err() {
                continue;
            }
            match op.kind {
                OpKind::Add => idx.update_for_addition(op.src, op.dst),
                OpKind::Delete => idx.update_for_deletion(op.src, op.dst),
            };
        }
        println!("# after {} updates", loaded.stream.len());
        print!("{}", idx.dump());
    }
    Ok(0)
}

fn cmd_dump_plans(args: DumpPlansArgs) -> Result<u8> {
    let mut table = LabelTable::new();
    let query = QueryGraph::new(load_graph(&read(&args.query)?, &mut table)?)?;
    if args.exact && query.vertex_count() > EXACT_MAX_VERTICES {
        bail!("--exact supports at most {EXACT_MAX_VERTICES} query vertices");
    }
    print_plans(&query, args.exact, &mut io::stdout().lock())?;
    Ok(0)
}

fn cmd_oracle_diff(input: InputArgs) -> Result<u8> {
    let loaded = load(&input)?;
    let mut data = loaded.data;
    let mut before = enumerate_static(&loaded.query, &data)?;
    let mut out = String::new();
    for op in &loaded.stream {
        if data.apply_update(*op).is_err() {
            continue;
        }
        let after = enumerate_static(&loaded.query, &data)?;
        let (added, removed) = diff_snapshots(&before, &after);
        let lines = match op.kind {
            OpKind::Add => added,
            OpKind::Delete => removed,
        };
        for m in lines {
            write_match_line(&mut out, op.kind, &m)?;
            out.push('\n');
        }
        before = after;
    }
    print!("{out}");
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<u8> {
    let seeds: Vec<u64> = (args.start_seed..args.start_seed + args.sessions).collect();
    let params = SessionParams::default();
    let config = SessionConfig {
        engine: args.ablations.engine(),
        ..Default::default()
    };
    if args.verify {
        let options = VerifyOptions {
            rebuild_every: Some(5),
            rebuild_offset: 0,
        };
        let mut failed = 0;
        for (seed, verdict) in verify_sweep(&seeds, &params, config, options) {
            let verdict = verdict?;
            if !verdict.passed() {
                failed += 1;
                println!("seed {seed}: {verdict}");
            }
        }
        println!("{} sessions, {failed} failed", seeds.len());
        return Ok(if failed == 0 { 0 } else { EXIT_VERIFY_FAIL });
    }
    let rows = if args.sequential {
        run_sweep_sequential(&seeds, &params, config)
    } else {
        run_sweep(&seeds, &params, config)
    };
    println!("{}", report::sweep_json(&summarize(&rows), &rows));
    Ok(0)
}

fn cmd_generate(args: GenerateArgs) -> Result<u8> {
    let inst = random_session(args.seed, &SessionParams::default());
    fs::create_dir_all(&args.out_dir)?;
    let table = LabelTable::new();
    fs::write(args.out_dir.join("query.graph"), inst.query.to_text(&table))?;
    fs::write(args.out_dir.join("data.graph"), inst.data.to_text(&table))?;
    fs::write(args.out_dir.join("stream.txt"), write_update_stream(&inst.stream))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::DumpIndex(a) => cmd_dump_index(a),
        Command::DumpPlans(a) => cmd_dump_plans(a),
        Command::OracleDiff(a) => cmd_oracle_diff(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<GraphError>() || c.is::<io::Error>()) {
                ExitCode::from(EXIT_PARSE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
