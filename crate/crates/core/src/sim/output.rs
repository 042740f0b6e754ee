//! Run configurations and the files written for each run.
//!
//! A run directory is named `<config-hash>-s<seed>`. Everything in it
//! except `timing.json` depends only on the scenario, the configuration
//! and the seed.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::run::{block_tags, run, RunOptions, RunResult, TypeMetrics};
use super::workload::generate_trace;
use crate::engine::{Engine, EngineKind};
use crate::model::{Scenario, WorkloadSpec};
use crate::pricing::PricingPolicy;

/// Everything that determines a run apart from the scenario and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub pricing: PricingPolicy,
    pub time_limit_ms: Option<u64>,
    pub arrival_rate: f64,
    pub mean_holding_time: f64,
    pub horizon: f64,
    pub deterministic_holding: bool,
    pub verify: bool,
    pub audit: bool,
    pub events: bool,
    pub sample_interval: f64,
}

impl RunConfig {
    /// Configuration taking workload and pricing from the scenario.
    pub fn from_scenario(scenario: &Scenario, engine: EngineKind) -> Self {
        let w = &scenario.workload;
        Self {
            engine,
            pricing: scenario.pricing,
            time_limit_ms: None,
            arrival_rate: w.arrival_rate,
            mean_holding_time: w.mean_holding_time,
            horizon: w.horizon,
            deterministic_holding: w.deterministic_holding,
            verify: true,
            audit: false,
            events: false,
            sample_interval: 0.0,
        }
    }

    pub fn workload(&self, seed: u64) -> WorkloadSpec {
        WorkloadSpec {
            arrival_rate: self.arrival_rate,
            mean_holding_time: self.mean_holding_time,
            horizon: self.horizon,
            seed,
            deterministic_holding: self.deterministic_holding,
        }
    }

    pub fn engine(&self) -> Engine {
        Engine::new(self.engine, self.pricing)
            .with_time_limit(self.time_limit_ms.map(Duration::from_millis))
    }

    pub fn options(&self) -> RunOptions {
        RunOptions {
            verify: self.verify,
            audit: self.audit,
            trace: self.events,
            sample_interval: self.sample_interval,
        }
    }

    /// Short label such as `pl8-kleinrock`.
    pub fn label(&self) -> String {
        let mode = serde_json::to_value(self.pricing.mode).expect("serializable");
        format!("{}-{}", self.engine, mode.as_str().unwrap_or("pricing"))
    }

    /// Hex SHA-256 prefix over the scenario and this configuration.
    pub fn hash(&self, scenario: &Scenario) -> String {
        let doc = json!({ "scenario": scenario.to_file(), "config": self });
        let digest = Sha256::digest(serde_json::to_vec(&doc).expect("serializable"));
        digest[..6].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Simulates one seed of `config`.
pub fn simulate(scenario: &Scenario, config: &RunConfig, seed: u64) -> RunResult {
    let trace = generate_trace(scenario, &config.workload(seed));
    run(
        scenario,
        &trace,
        config.horizon,
        &config.engine(),
        &config.options(),
    )
}

fn type_rows(csv: &mut String, kind: &str, m: &TypeMetrics) {
    let mut row = |name: &str, value: String| {
        let _ = writeln!(csv, "{name},{kind},{value}");
    };
    row("offered", m.offered.to_string());
    row("accepted", m.accepted.to_string());
    row("blocked", m.blocked.to_string());
    row("blocking_probability", m.blocking_probability().to_string());
    row("mean_cost", m.mean_cost().to_string());
    row("non_optimal", m.non_optimal.to_string());
    for tag in block_tags() {
        let n = m.blocked_by_reason.get(tag).copied().unwrap_or(0);
        row(&format!("blocked_{tag}"), n.to_string());
    }
}

/// `metric,slice_type,value` rows of a run.
pub fn metrics_csv(result: &RunResult) -> String {
    let m = &result.metrics;
    let mut csv = String::from("metric,slice_type,value\n");
    for (kind, tm) in &m.by_type {
        type_rows(&mut csv, kind, tm);
    }
    let all = super::run::ALL_TYPES;
    for (name, value) in [
        ("mean_concurrent", m.mean_concurrent.to_string()),
        ("max_concurrent", m.max_concurrent.to_string()),
        ("checker_failures", m.checker_failures.to_string()),
        (
            "conservation_violations",
            m.conservation_violations.to_string(),
        ),
        (
            "max_conservation_error",
            m.max_conservation_error.to_string(),
        ),
        (
            "drained_to_initial",
            u8::from(m.drained_to_initial).to_string(),
        ),
    ] {
        let _ = writeln!(csv, "{name},{all},{value}");
    }
    csv
}

pub fn timeseries_csv(result: &RunResult) -> String {
    let mut csv = String::from(
        "time,active,mean_link_utilization,max_link_utilization,mean_node_utilization\n",
    );
    for s in &result.metrics.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            s.time,
            s.active,
            s.mean_link_utilization,
            s.max_link_utilization,
            s.mean_node_utilization
        );
    }
    csv
}

pub fn summary_json(
    scenario: &Scenario,
    config: &RunConfig,
    seed: u64,
    result: &RunResult,
) -> serde_json::Value {
    let m = &result.metrics;
    let by_type: serde_json::Map<String, serde_json::Value> = m
        .by_type
        .iter()
        .map(|(k, t)| {
            (
                k.clone(),
                json!({
                    "offered": t.offered,
                    "accepted": t.accepted,
                    "blocked": t.blocked,
                    "blocking_probability": t.blocking_probability(),
                    "mean_cost": t.mean_cost(),
                    "non_optimal": t.non_optimal,
                    "blocked_by_reason": t.blocked_by_reason,
                }),
            )
        })
        .collect();
    json!({
        "config_hash": config.hash(scenario),
        "seed": seed,
        "config": config,
        "by_type": by_type,
        "mean_concurrent": m.mean_concurrent,
        "max_concurrent": m.max_concurrent,
        "checker_failures": m.checker_failures,
        "conservation_violations": m.conservation_violations,
        "max_conservation_error": m.max_conservation_error,
        "drained_to_initial": m.drained_to_initial,
    })
}

fn timing_json(result: &RunResult) -> serde_json::Value {
    let ms = |d: &Duration| d.as_secs_f64() * 1e3;
    let per_type: serde_json::Map<String, serde_json::Value> = result
        .timing
        .solve_times
        .iter()
        .map(|(k, v)| {
            let total: f64 = v.iter().map(ms).sum();
            let max = v.iter().map(ms).fold(0.0, f64::max);
            (
                k.clone(),
                json!({ "solves": v.len(), "mean_ms": total / v.len().max(1) as f64, "max_ms": max }),
            )
        })
        .collect();
    json!({ "total_ms": ms(&result.timing.total), "solve": per_type })
}

/// Writes the run directory under `out` and returns its path.
pub fn write_run(
    out: &Path,
    scenario: &Scenario,
    config: &RunConfig,
    seed: u64,
    result: &RunResult,
) -> io::Result<PathBuf> {
    let dir = out.join(format!("{}-s{seed}", config.hash(scenario)));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(result))?;
    let summary = summary_json(scenario, config, seed, result);
    fs::write(dir.join("summary.json"), to_pretty(&summary))?;
    fs::write(dir.join("timeseries.csv"), timeseries_csv(result))?;
    if config.events {
        let mut lines = String::new();
        for e in &result.events {
            lines.push_str(&serde_json::to_string(e).expect("serializable"));
            lines.push('\n');
        }
        fs::write(dir.join("events.jsonl"), lines)?;
    }
    fs::write(dir.join("timing.json"), to_pretty(&timing_json(result)))?;
    Ok(dir)
}

pub(crate) fn to_pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::line_scenario;

    fn config() -> RunConfig {
        let mut c = RunConfig::from_scenario(&line_scenario(4, 20.0), EngineKind::Pl { k: 2 });
        c.arrival_rate = 1.0;
        c.mean_holding_time = 2.0;
        c.horizon = 20.0;
        c
    }

    #[test]
    fn hash_ignores_seed_but_not_config() {
        let s = line_scenario(4, 20.0);
        let a = config();
        let mut b = config();
        b.engine = EngineKind::Nl;
        assert_eq!(a.hash(&s), config().hash(&s));
        assert_ne!(a.hash(&s), b.hash(&s));
        assert_eq!(a.hash(&s).len(), 12);
    }

    #[test]
    fn metrics_csv_lists_every_reason() {
        let s = line_scenario(4, 20.0);
        let r = simulate(&s, &config(), 3);
        let csv = metrics_csv(&r);
        assert!(csv.starts_with("metric,slice_type,value\n"));
        for tag in block_tags() {
            assert!(csv.contains(&format!("blocked_{tag},all,")));
        }
        assert!(csv.contains("drained_to_initial,all,1"));
    }

    #[test]
    fn label_names_engine_and_pricing() {
        let mut c = config();
        assert_eq!(c.label(), "pl2-static");
        c.pricing = PricingPolicy::kleinrock(100.0);
        c.engine = EngineKind::Nl;
        assert_eq!(c.label(), "nl-kleinrock");
    }
}
