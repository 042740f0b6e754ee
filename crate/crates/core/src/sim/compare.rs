//! Several configurations over common seeds.
//!
//! Every configuration sees the same trace for a given seed, so
//! differences between configurations are paired.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use super::output::{write_run, RunConfig};
use super::run::{run, RunMetrics};
use super::workload::generate_trace;
use crate::model::Scenario;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "SLICEBED_THREADS";

/// Worker count from [`THREADS_ENV`], or rayon's default.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub config: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
}

/// Runs every configuration on every seed. Traces are built from the
/// workload of the first configuration; results are ordered by seed,
/// then configuration.
pub fn compare(
    scenario: &Scenario,
    configs: &[RunConfig],
    seeds: Range<u64>,
    out: Option<&Path>,
) -> io::Result<Vec<Cell>> {
    let Some(first) = configs.first() else {
        return Ok(Vec::new());
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(io::Error::other)?;
    let jobs: Vec<(u64, usize)> = seeds
        .flat_map(|s| (0..configs.len()).map(move |c| (s, c)))
        .collect();
    let traces: Vec<(u64, Vec<_>)> = pool.install(|| {
        jobs.iter()
            .filter(|(_, c)| *c == 0)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|(s, _)| (*s, generate_trace(scenario, &first.workload(*s))))
            .collect()
    });
    let cells: Vec<io::Result<Cell>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, c)| {
                let config = &configs[c];
                let trace = &traces
                    .iter()
                    .find(|(s, _)| *s == seed)
                    .expect("trace per seed")
                    .1;
                let result = run(
                    scenario,
                    trace,
                    first.horizon,
                    &config.engine(),
                    &config.options(),
                );
                if let Some(out) = out {
                    write_run(out, scenario, config, seed, &result)?;
                }
                Ok(Cell {
                    config: c,
                    seed,
                    metrics: result.metrics,
                })
            })
            .collect()
    });
    let cells = cells.into_iter().collect::<io::Result<Vec<_>>>()?;
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        fs::write(out.join("compare.csv"), compare_csv(configs, &cells))?;
        fs::write(
            out.join("compare_summary.csv"),
            summary_csv(configs, &cells),
        )?;
    }
    Ok(cells)
}

/// One row per configuration and seed.
pub fn compare_csv(configs: &[RunConfig], cells: &[Cell]) -> String {
    let mut csv =
        String::from("config,label,seed,offered,accepted,blocking_probability,mean_cost\n");
    for cell in cells {
        let all = cell.metrics.all();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            cell.config,
            configs[cell.config].label(),
            cell.seed,
            all.offered,
            all.accepted,
            all.blocking_probability(),
            all.mean_cost()
        );
    }
    csv
}

/// Mean blocking and cost per configuration with paired differences to
/// the first configuration.
pub fn summary_csv(configs: &[RunConfig], cells: &[Cell]) -> String {
    let mut csv = String::from(
        "config,label,seeds,mean_blocking_probability,mean_cost,delta_blocking_probability,delta_mean_cost\n",
    );
    let column = |c: usize| -> Vec<(u64, f64, f64)> {
        cells
            .iter()
            .filter(|cell| cell.config == c)
            .map(|cell| {
                let a = cell.metrics.all();
                (cell.seed, a.blocking_probability(), a.mean_cost())
            })
            .collect()
    };
    let base = column(0);
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    for (c, config) in configs.iter().enumerate() {
        let col = column(c);
        let bp: Vec<f64> = col.iter().map(|r| r.1).collect();
        let cost: Vec<f64> = col.iter().map(|r| r.2).collect();
        let dbp: Vec<f64> = col.iter().zip(&base).map(|(r, b)| r.1 - b.1).collect();
        let dcost: Vec<f64> = col.iter().zip(&base).map(|(r, b)| r.2 - b.2).collect();
        let _ = writeln!(
            csv,
            "{c},{},{},{},{},{},{}",
            config.label(),
            col.len(),
            mean(&bp),
            mean(&cost),
            mean(&dbp),
            mean(&dcost)
        );
    }
    csv
}
