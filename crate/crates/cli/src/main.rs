mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use ems_core::agents::{
    write_trace, AgentBackend, AgentPool, AgentProfile, HttpAgent, HttpAgentConfig, SimulatedAgent,
    TraceRecord, TraceTable,
};
use ems_core::confidence::{historical_reliability, ScoringConfig};
use ems_core::domain::{load_state, save_state};
use ems_core::embedding::{EmbeddingProvider, HashingEncoder, HttpEncoder};
use ems_core::harness::synthetic::{
    heterogeneous_profiles, specialist_profiles, synthetic_dataset, unanimous_profiles,
};
use ems_core::harness::{
    load_dataset, oracle_check, replay_pool, run_experiment, simulated_pool, write_audit,
    write_dataset, ExperimentReport, ExperimentSettings,
};
use ems_core::{AnswerMode, Query, Vote};

use config::{AgentSource, RunConfig, RunOptions};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(
    name = "ems",
    version,
    about = "Reliability-ordered majority voting with quorum early stopping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic topic-tagged dataset
    GenDataset {
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate every agent on every query and record the answers
    GenTrace {
        /// Profiles file (JSON array) or `preset:heterogeneous|specialist|unanimous`
        #[arg(long)]
        profiles: String,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        numeric_answers: bool,
    },
    /// Run the configured strategies and write report, table, audit log and trace
    Run {
        /// TOML config file; flags override its values
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        options: Box<RunOptions>,
    },
    /// Recheck a report against its trace with the brute-force oracle
    Verify {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Defaults to the mode recorded in the report
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        numeric_answers: Option<bool>,
    },
    /// Print per-agent statistics of a state snapshot
    ShowState {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        cold_start_prior: Option<f64>,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Mismatch(usize),
}

impl Failure {
    fn config(e: impl Into<anyhow::Error>) -> Self {
        Failure::Config(e.into())
    }

    fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenDataset { queries, seed, out } => gen_dataset(queries, seed, &out),
        Command::GenTrace {
            profiles,
            dataset,
            seed,
            out,
            numeric_answers,
        } => gen_trace(&profiles, &dataset, seed, &out, mode(numeric_answers)),
        Command::Run { config, options } => run(config.as_deref(), *options),
        Command::Verify {
            trace,
            report,
            numeric_answers,
        } => verify(&trace, &report, numeric_answers),
        Command::ShowState {
            state,
            cold_start_prior,
        } => show_state(&state, cold_start_prior),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Mismatch(n)) => {
            eprintln!("verification failed: {n} mismatches");
            ExitCode::from(EXIT_MISMATCH)
        }
    }
}

fn mode(numeric: bool) -> AnswerMode {
    if numeric {
        AnswerMode::Numeric
    } else {
        AnswerMode::Text
    }
}

fn load_profiles(profiles_arg: &str) -> Result<Vec<AgentProfile>, Failure> {
    match profiles_arg.strip_prefix("preset:") {
        Some("heterogeneous") => Ok(heterogeneous_profiles()),
        Some("specialist") => Ok(specialist_profiles()),
        Some("unanimous") => Ok(unanimous_profiles(9)),
        Some(other) => Err(Failure::config(anyhow!(
            "`profiles`: unknown preset `{other}` (heterogeneous, specialist, unanimous)"
        ))),
        None => AgentProfile::load_file(Path::new(profiles_arg))
            .with_context(|| format!("`profiles`: cannot load {profiles_arg}"))
            .map_err(Failure::Config),
    }
}

fn load_queries(path: &Path, mode: AnswerMode) -> Result<Vec<Query>, Failure> {
    load_dataset(path, mode)
        .with_context(|| format!("`dataset`: cannot load {}", path.display()))
        .map_err(Failure::Config)
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let run = || -> std::io::Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        write(&mut out)?;
        out.flush()
    };
    run()
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Runtime)
}

fn sha256_file(path: &Path) -> Result<String, Failure> {
    let bytes = fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Runtime)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn gen_dataset(queries: usize, seed: u64, out: &Path) -> CmdResult {
    if queries == 0 {
        return Err(Failure::config(anyhow!("`queries` must be at least 1")));
    }
    let dataset = synthetic_dataset(queries, seed);
    write_file(out, |w| write_dataset(w, &dataset))?;
    println!("{} queries written to {}", dataset.len(), out.display());
    Ok(())
}

fn gen_trace(profiles: &str, dataset: &Path, seed: u64, out: &Path, mode: AnswerMode) -> CmdResult {
    let profiles = load_profiles(profiles)?;
    let queries = load_queries(dataset, mode)?;
    let agents = profiles
        .into_iter()
        .enumerate()
        .map(|(i, p)| SimulatedAgent::new(i, p, seed, mode).map(SimulatedAgent::without_latency))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::config)?;
    let records = ems_core::agents::simulated_answer_stream(&agents, &queries);
    write_file(out, |w| write_trace(w, &records))?;
    println!(
        "{} records written to {} (sha256 {})",
        records.len(),
        out.display(),
        sha256_file(out)?
    );
    Ok(())
}

/// Asks every endpoint every query once; failures leave no record (abstain on replay).
fn record_live_trace(backends: &[HttpAgent], queries: &[Query]) -> Vec<TraceRecord> {
    let mut records = Vec::new();
    for q in queries {
        let votes: Vec<Vote> = std::thread::scope(|scope| {
            let handles: Vec<_> = backends
                .iter()
                .map(|b| scope.spawn(move || b.invoke(q).unwrap_or(Vote::Abstain)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("endpoint worker panicked"))
                .collect()
        });
        for (i, vote) in votes.into_iter().enumerate() {
            if let Vote::Answer(a) = vote {
                records.push(TraceRecord {
                    query_id: q.id.clone(),
                    agent_id: i,
                    answer: a.raw,
                });
            }
        }
    }
    records
}

fn build_pool(
    cfg: &RunConfig,
    queries: &[Query],
) -> Result<(AgentPool, Vec<TraceRecord>), Failure> {
    let mode = mode(cfg.numeric_answers);
    match &cfg.source {
        AgentSource::Profiles(profiles_arg) => {
            let profiles = load_profiles(profiles_arg)?;
            simulated_pool(&profiles, queries, cfg.seed, mode).map_err(Failure::config)
        }
        AgentSource::Trace(path) => {
            let records = ems_core::agents::read_trace(path)
                .with_context(|| format!("`trace`: cannot load {}", path.display()))
                .map_err(Failure::Config)?;
            let table = TraceTable::from_records(records.clone())
                .with_context(|| format!("`trace`: {}", path.display()))
                .map_err(Failure::Config)?;
            let pool = replay_pool(Arc::new(table), Vec::new(), mode).map_err(Failure::config)?;
            Ok((pool, records))
        }
        AgentSource::Endpoints(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("`endpoints`: cannot read {}", path.display()))
                .map_err(Failure::Config)?;
            let configs: Vec<HttpAgentConfig> = serde_json::from_str(&text)
                .with_context(|| format!("`endpoints`: invalid JSON in {}", path.display()))
                .map_err(Failure::Config)?;
            if configs.is_empty() {
                return Err(Failure::config(anyhow!("`endpoints`: no endpoints listed")));
            }
            let agents = configs
                .into_iter()
                .enumerate()
                .map(|(i, c)| HttpAgent::new(i, c, mode))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::config(anyhow!("`endpoints`: {e}")))?;
            let labels = agents.iter().map(|a| a.id().label.clone()).collect();
            let n = agents.len();
            let records = record_live_trace(&agents, queries);
            // Agents or queries without any answer still belong to the run.
            let table = TraceTable::from_records(records.clone())
                .map_err(Failure::runtime)?
                .with_pool(n, queries.iter().map(|q| q.id.clone()));
            let pool = replay_pool(Arc::new(table), labels, mode).map_err(Failure::runtime)?;
            Ok((pool, records))
        }
    }
}

fn embedder(cfg: &RunConfig) -> Result<Box<dyn EmbeddingProvider>, Failure> {
    match &cfg.embed_url {
        None => Ok(Box::new(HashingEncoder::new(cfg.dim))),
        Some(url) => {
            let token = match &cfg.embed_token_env {
                Some(var) => Some(std::env::var(var).map_err(|_| {
                    Failure::config(anyhow!(
                        "`embed_token_env`: environment variable `{var}` is not set"
                    ))
                })?),
                None => None,
            };
            Ok(Box::new(HttpEncoder::new(
                url.clone(),
                token,
                cfg.dim,
                Duration::from_secs(30),
            )))
        }
    }
}

fn run(config: Option<&Path>, flags: RunOptions) -> CmdResult {
    let options = match config {
        Some(path) => RunOptions::from_file(path)
            .map_err(Failure::Config)?
            .overlay(flags),
        None => flags,
    };
    let cfg = RunConfig::resolve(options).map_err(Failure::Config)?;
    let mode = mode(cfg.numeric_answers);
    let queries = load_queries(&cfg.dataset, mode)?;
    let initial = match &cfg.state_in {
        Some(path) => Some(
            load_state(path)
                .with_context(|| format!("`state_in`: cannot load {}", path.display()))
                .map_err(Failure::Config)?,
        ),
        None => None,
    };
    let (pool, records) = build_pool(&cfg, &queries)?;
    let embedder = embedder(&cfg)?;

    let settings = ExperimentSettings {
        seed: cfg.seed,
        strategies: cfg.strategies.clone(),
        scoring: ScoringConfig {
            cold_start_prior: cfg.cold_start_prior,
            laplace: cfg.laplace,
        },
        answer_mode: mode,
        buffer_capacity: cfg.buffer_capacity,
        prune_impossible: cfg.prune_impossible,
        parallel: cfg.parallel,
    };
    let mut result = run_experiment(
        &settings,
        &queries,
        &pool,
        embedder.as_ref(),
        initial.as_ref(),
    )
    .map_err(|e| match e {
        ems_core::harness::HarnessError::Config(_) => Failure::config(e),
        other => Failure::runtime(other),
    })?;

    let mut effective = serde_json::to_value(&cfg).expect("config serializes");
    effective["pool_size"] = pool.len().into();
    result.report.set_config(effective);

    let out = &cfg.out;
    write_file(&out.join("report.json"), |w| {
        w.write_all(result.report.to_json().as_bytes())
    })?;
    write_file(&out.join("table.csv"), |w| {
        w.write_all(result.report.table_csv().as_bytes())
    })?;
    write_file(&out.join("audit.jsonl"), |w| write_audit(w, &result.audit))?;
    write_file(&out.join("trace.jsonl"), |w| write_trace(w, &records))?;

    if let Some(path) = &cfg.state_out {
        let single = result.final_states.len() == 1;
        for (strategy, state) in &result.final_states {
            let target = if single {
                path.clone()
            } else {
                suffixed(path, &strategy.to_string())
            };
            if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(Failure::runtime)?;
            }
            save_state(state, &target)
                .with_context(|| format!("cannot write {}", target.display()))
                .map_err(Failure::Runtime)?;
            println!("state for {strategy} written to {}", target.display());
        }
    }

    print!("{}", result.report.render_table());
    println!("config digest {}", result.report.config_digest);
    println!("outputs written to {}", out.display());
    Ok(())
}

/// `state.json` + `ems-rel` -> `state.ems-rel.json`.
fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn verify(trace: &Path, report: &Path, numeric: Option<bool>) -> CmdResult {
    let text = fs::read_to_string(report)
        .with_context(|| format!("`report`: cannot read {}", report.display()))
        .map_err(Failure::Config)?;
    let report = ExperimentReport::from_json(&text)
        .with_context(|| format!("`report`: invalid report {}", report.display()))
        .map_err(Failure::Config)?;
    let table = TraceTable::load(trace)
        .with_context(|| format!("`trace`: cannot load {}", trace.display()))
        .map_err(Failure::Config)?;
    // Queries on which every agent abstained have no trace records.
    let reported = report
        .strategies
        .iter()
        .flat_map(|s| s.per_query.iter().map(|r| r.query_id.clone()));
    let table = table.with_pool(report.pool_size, reported.collect::<Vec<_>>());
    let recorded = report
        .config
        .get("numeric_answers")
        .and_then(serde_json::Value::as_bool);
    let mode = mode(numeric.or(recorded).unwrap_or(false));
    let verdict = oracle_check(&table, &report, mode).map_err(Failure::runtime)?;
    for m in verdict.mismatches.iter().take(20) {
        println!(
            "mismatch {} {} {}: expected {}, found {}",
            m.strategy, m.query_id, m.field, m.expected, m.found
        );
    }
    for s in &verdict.answer_checks_skipped {
        println!("note: {s} answers depend on reliability weights and are not recomputed");
    }
    println!(
        "{} checks, {} mismatches",
        verdict.checked,
        verdict.mismatches.len()
    );
    if verdict.passed() {
        Ok(())
    } else {
        Err(Failure::Mismatch(verdict.mismatches.len()))
    }
}

fn show_state(path: &Path, prior: Option<f64>) -> CmdResult {
    let state = load_state(path)
        .with_context(|| format!("`state`: cannot load {}", path.display()))
        .map_err(Failure::Config)?;
    let scoring = ScoringConfig {
        cold_start_prior: prior.unwrap_or(ems_core::confidence::COLD_START_PRIOR),
        ..ScoringConfig::default()
    };
    println!(
        "{} agents, buffer capacity {}, dimension {}",
        state.len(),
        state.capacity,
        state.dim
    );
    println!(
        "{:>5}  {:<20} {:>8} {:>8} {:>7} {:>10}",
        "index", "label", "c", "v", "S^h", "buffer"
    );
    for phi in &state.agents {
        println!(
            "{:>5}  {:<20} {:>8} {:>8} {:>7.2} {:>10}",
            phi.id.index,
            phi.id.label,
            phi.agreed,
            phi.participated,
            historical_reliability(phi, &scoring).value,
            format!("{}/{}", phi.buffer.len(), state.capacity)
        );
    }
    Ok(())
}
