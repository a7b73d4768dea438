use std::io::Write;
use std::time::Duration;

use serde::Serialize;

use crate::graph::Graph;
use crate::search::{search, Query, SearchConfig};

/// Version tag written in the first column of every report row.
pub const BENCH_SCHEMA: &str = "graphlens-bench/1";

pub struct BenchCase {
    pub name: String,
    pub graph: Graph,
    pub query: Query,
}

/// One (graph, worker count) row; timings are medians over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub schema: &'static str,
    pub graph: String,
    pub query: String,
    pub nt: usize,
    pub reps: usize,
    pub t1_ms: Option<f64>,
    pub tlast_ms: Option<f64>,
    pub total_s: f64,
    pub solutions: usize,
    /// True when every repetition found the same number of solutions.
    pub solutions_stable: bool,
    pub trees_built: u64,
    pub partial_trees: u64,
    pub steals: u64,
    pub stop: &'static str,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn median_u64(v: Vec<u64>) -> u64 {
    median(v.into_iter().map(|x| x as f64).collect()).round() as u64
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Runs each case with each worker count `reps` times (at least 3).
pub fn run_bench(
    cases: &[BenchCase],
    nt_list: &[usize],
    timeout: Option<Duration>,
    max_solutions: Option<usize>,
    reps: usize,
) -> BenchReport {
    let reps = reps.max(3);
    let mut report = BenchReport::default();
    for case in cases {
        for &nt in nt_list {
            let config = SearchConfig {
                workers: nt,
                max_solutions,
                timeout,
            };
            let runs: Vec<_> = (0..reps).map(|_| search(&case.graph, &case.query, config).stats).collect();
            let firsts: Vec<f64> = runs.iter().filter_map(|s| s.first_solution.map(ms)).collect();
            let lasts: Vec<f64> = runs.iter().filter_map(|s| s.last_solution.map(ms)).collect();
            let counts: Vec<usize> = runs.iter().map(|s| s.solutions).collect();
            report.rows.push(BenchRow {
                schema: BENCH_SCHEMA,
                graph: case.name.clone(),
                query: case.query.keywords().join(" "),
                nt,
                reps,
                t1_ms: (!firsts.is_empty()).then(|| median(firsts)),
                tlast_ms: (!lasts.is_empty()).then(|| median(lasts)),
                total_s: median(runs.iter().map(|s| s.total.as_secs_f64()).collect()),
                solutions: counts[0],
                solutions_stable: counts.iter().all(|c| *c == counts[0]),
                trees_built: median_u64(runs.iter().map(|s| s.trees_built).collect()),
                partial_trees: median_u64(runs.iter().map(|s| s.partial_trees).collect()),
                steals: median_u64(runs.iter().map(|s| s.steals).collect()),
                stop: runs[0].stop.name(),
            });
        }
    }
    report
}
