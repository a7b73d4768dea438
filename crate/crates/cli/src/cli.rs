//! Command-line interface.

use std::fmt;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use graphlens::graph::Graph;
use graphlens::ingest::{DefaultExtractor, IngestCounters, IngestState, Ingestor, SimilarityConfig};
use graphlens::policy::Policy;
use graphlens::search::{default_order, rank_solutions, search, Query, SearchConfig};
use graphlens::snapshot;
use graphlens::synth::{default_query, run_bench, BenchCase, GraphSpec};
use serde_json::json;

use crate::dto::{AnswerTreeDto, GraphStatsDto, SearchStatsDto};
use crate::server::{self, AppState};

pub const PORT_ENV: &str = "GRAPHLENS_PORT";
const DEFAULT_STATE: &str = "graphlens.state.json";

#[derive(Debug, Parser)]
#[command(name = "graphlens", version, about = "Integrate heterogeneous sources into a graph and search it by keywords")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct StateArg {
    /// Ingestion state file, created on first use.
    #[arg(long, default_value = DEFAULT_STATE)]
    pub state: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest XML, JSON, HTML, N-Triples (.nt) or CSV files into the state file.
    Ingest {
        #[command(flatten)]
        state: StateArg,
        /// Extraction policy file.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Gazetteer file, lines of `<Type> <surface>`.
        #[arg(long)]
        gazetteer: Vec<PathBuf>,
        /// Only extract gazetteer entries.
        #[arg(long)]
        no_patterns: bool,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Add sameAs and equivalence links between similar labels.
    Link {
        #[command(flatten)]
        state: StateArg,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        /// Compare every pair instead of pairs sharing a token.
        #[arg(long)]
        no_blocking: bool,
    },
    /// Freeze the ingested graph and write a snapshot.
    #[command(visible_alias = "save")]
    Freeze {
        #[command(flatten)]
        state: StateArg,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Load a snapshot, check it and print its manifest.
    Load { snapshot: PathBuf },
    /// Generate a synthetic graph (`chain:K` or `star:P,K`) as a snapshot.
    Gen {
        spec: GraphSpec,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a keyword query.
    Query {
        /// Snapshot, or an ingestion state file (`.json`) frozen on the fly.
        #[arg(long)]
        graph: PathBuf,
        /// Comma-separated keywords.
        #[arg(long, value_delimiter = ',', required = true)]
        kw: Vec<String>,
        /// Worker threads.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        nt: u32,
        /// Stop after this many solutions.
        #[arg(long)]
        max: Option<usize>,
        /// Time limit in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        /// Print solutions smallest first instead of in discovery order.
        #[arg(long)]
        rank: bool,
        /// Emit JSON.
        #[arg(long)]
        json: bool,
    },
    /// Time queries on synthetic graphs and write a CSV report.
    Bench {
        /// Graph specs such as `chain:12` or `star:4,100`.
        #[arg(required = true)]
        specs: Vec<GraphSpec>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        nt: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        max: Option<usize>,
        #[arg(long)]
        timeout: Option<f64>,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API. `GRAPHLENS_PORT` overrides `--port`.
    Serve {
        /// Snapshot to serve; without it every data endpoint answers 409.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Cap on search workers across concurrent queries.
        #[arg(long)]
        max_workers: Option<usize>,
    },
}

/// Runtime failure; reported with exit code 1.
#[derive(Debug)]
pub struct Failure(pub String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(Failure(msg.into()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn extractor(gazetteers: &[PathBuf], no_patterns: bool) -> Result<DefaultExtractor> {
    let mut x = DefaultExtractor::new();
    if no_patterns {
        x = x.without_patterns();
    }
    for g in gazetteers {
        x.load_typed_gazetteer(&read(g)?)
            .map_err(|e| Failure(format!("{}: {e}", g.display())))?;
    }
    Ok(x)
}

fn load_state(path: &Path, extractor: DefaultExtractor) -> Result<Ingestor> {
    if !path.exists() {
        return Ok(Ingestor::new(extractor));
    }
    let state: IngestState =
        serde_json::from_str(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Ok(Ingestor::resume(state, extractor))
}

fn save_state(path: &Path, ing: &Ingestor) -> Result<()> {
    let body = serde_json::to_vec(&ing.state())?;
    std::fs::write(path, body).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn counters_json(c: &IngestCounters) -> serde_json::Value {
    serde_json::to_value(c).expect("serializable counters")
}

/// Records ingestion counters as graph parameters, under `ingest.`.
fn freeze_with_counters(ing: &mut Ingestor) -> Graph {
    let counters = counters_json(ing.counters());
    if let Some(map) = counters.as_object() {
        for (k, v) in map {
            ing.builder_mut().set_param(format!("ingest.{k}"), v.to_string());
        }
    }
    ing.freeze()
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let mut ing = load_state(path, DefaultExtractor::new())?;
        return Ok(freeze_with_counters(&mut ing));
    }
    snapshot::load(path).map_err(|e| match e {
        snapshot::SnapshotError::Io { .. } => Failure(e.to_string()),
        e => Failure(format!("{}: {e}", path.display())),
    })
}

fn secs(t: Option<f64>) -> Result<Option<Duration>> {
    match t {
        Some(s) if !(s.is_finite() && s >= 0.0) => fail(format!("invalid timeout {s}")),
        t => Ok(t.map(Duration::from_secs_f64)),
    }
}

fn print_json(out: &mut impl Write, v: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

pub fn run(cli: Cli, out: &mut impl Write) -> Result<()> {
    match cli.command {
        Command::Ingest {
            state,
            policy,
            gazetteer,
            no_patterns,
            files,
        } => {
            let mut ing = load_state(&state.state, extractor(&gazetteer, no_patterns)?)?;
            if let Some(p) = policy {
                let pol = Policy::parse(&read(&p)?).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
                ing.set_policy(pol);
            }
            for f in &files {
                ing.ingest_file(f)?;
            }
            save_state(&state.state, &ing)?;
            print_json(out, &json!({ "state": state.state, "counters": counters_json(ing.counters()) }))
        }
        Command::Link {
            state,
            threshold,
            no_blocking,
        } => {
            if !state.state.exists() {
                return fail(format!("{}: no ingestion state; run `ingest` first", state.state.display()));
            }
            let mut ing = load_state(&state.state, DefaultExtractor::new())?;
            let report = ing.link_similar(SimilarityConfig {
                threshold,
                blocking: !no_blocking,
            })?;
            save_state(&state.state, &ing)?;
            print_json(out, &report)
        }
        Command::Freeze { state, out: path } => {
            if !state.state.exists() {
                return fail(format!("{}: no ingestion state; run `ingest` first", state.state.display()));
            }
            let mut ing = load_state(&state.state, DefaultExtractor::new())?;
            let g = freeze_with_counters(&mut ing);
            snapshot::save(&g, &path)?;
            print_json(out, &json!({ "snapshot": path, "stats": GraphStatsDto::new(&g) }))
        }
        Command::Load { snapshot: path } => {
            let bytes = std::fs::read(&path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            let manifest = snapshot::read_manifest(&bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            let g = snapshot::decode(&bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            print_json(out, &json!({ "manifest": manifest, "stats": GraphStatsDto::new(&g) }))
        }
        Command::Gen { spec, out: path } => {
            let g = spec.build();
            snapshot::save(&g, &path)?;
            print_json(out, &json!({ "snapshot": path, "spec": spec.to_string(), "stats": GraphStatsDto::new(&g) }))
        }
        Command::Query {
            graph,
            kw,
            nt,
            max,
            timeout,
            rank,
            json,
        } => {
            let g = load_graph(&graph)?;
            let q = Query::new(&kw)?;
            let outcome = search(
                &g,
                &q,
                SearchConfig {
                    workers: nt as usize,
                    max_solutions: max,
                    timeout: secs(timeout)?,
                },
            );
            let stats = SearchStatsDto::from(&outcome.stats);
            let solutions = if rank {
                rank_solutions(outcome.solutions, |a, b| default_order(&g, a, b))
            } else {
                outcome.solutions
            };
            if json {
                let trees: Vec<AnswerTreeDto> = solutions.iter().map(|s| AnswerTreeDto::new(&g, s)).collect();
                print_json(
                    out,
                    &json!({
                        "query": q.keywords(),
                        "stats": stats,
                        "graph": GraphStatsDto::new(&g),
                        "solutions": trees,
                    }),
                )
            } else {
                for s in &solutions {
                    let dto = AnswerTreeDto::new(&g, s);
                    let labels: Vec<&str> = dto.nodes.iter().map(|n| n.label.as_str()).collect();
                    writeln!(
                        out,
                        "#{} root {} edges {} sources {}: {}",
                        s.sequence,
                        s.root,
                        s.size(),
                        dto.stats.data_sources,
                        labels.join(" | ")
                    )?;
                }
                writeln!(
                    out,
                    "{} solutions, stop {}, first {}, total {:.1} ms",
                    stats.solutions,
                    stats.stop,
                    stats.first_solution_ms.map(|t| format!("{t:.1} ms")).unwrap_or_else(|| "-".into()),
                    stats.total_ms
                )?;
                Ok(())
            }
        }
        Command::Bench {
            specs,
            nt,
            reps,
            max,
            timeout,
            out: path,
        } => {
            if nt.contains(&0) {
                return fail("worker counts must be positive");
            }
            let cases: Vec<BenchCase> = specs
                .iter()
                .map(|s| BenchCase {
                    name: s.to_string(),
                    graph: s.build(),
                    query: default_query(s),
                })
                .collect();
            let report = run_bench(&cases, &nt, secs(timeout)?, max, reps);
            match path {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| Failure(format!("{}: {e}", p.display())))?;
                    report.write_csv(f)?;
                }
                None => report.write_csv(&mut *out)?,
            }
            Ok(())
        }
        Command::Serve {
            graph,
            port,
            host,
            max_workers,
        } => {
            let port = match std::env::var(PORT_ENV) {
                Ok(v) => v
                    .parse::<u16>()
                    .map_err(|_| Failure(format!("{PORT_ENV}={v:?} is not a port number")))?,
                Err(_) => port,
            };
            let g = graph.as_deref().map(load_graph).transpose()?;
            let cap = max_workers
                .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
            let state = AppState::new(g, cap);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(server::serve(state, SocketAddr::new(host, port)))?;
            Ok(())
        }
    }
}
