//! Event loop of one simulation run.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Duration;

use serde::Serialize;

use crate::engine::{Blocked, Engine};
use crate::model::{check_embedding, Embedding, Footprint, ResidualState, Scenario, SliceRequest};

/// Label of the aggregate row in per-type metrics.
pub const ALL_TYPES: &str = "all";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Check every admitted embedding with the independent checker.
    pub verify: bool,
    /// Compare the ledger with the admitted footprints after every event.
    pub audit: bool,
    /// Record every event.
    pub trace: bool,
    /// Spacing of the utilization time series; none when zero.
    pub sample_interval: f64,
}

/// Counters of one slice type.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TypeMetrics {
    pub offered: u64,
    pub accepted: u64,
    pub blocked: u64,
    pub blocked_by_reason: BTreeMap<String, u64>,
    /// Admissions whose solve hit the time limit.
    pub non_optimal: u64,
    pub cost_sum: f64,
}

impl TypeMetrics {
    pub fn blocking_probability(&self) -> f64 {
        if self.offered == 0 {
            0.0
        } else {
            self.blocked as f64 / self.offered as f64
        }
    }

    pub fn mean_cost(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.cost_sum / self.accepted as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Sample {
    pub time: f64,
    pub active: usize,
    pub mean_link_utilization: f64,
    pub max_link_utilization: f64,
    pub mean_node_utilization: f64,
}

/// Deterministic results of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunMetrics {
    pub by_type: BTreeMap<String, TypeMetrics>,
    /// Time average of the number of active slices over the horizon.
    pub mean_concurrent: f64,
    pub max_concurrent: usize,
    /// Admitted embeddings rejected by the checker (verify mode).
    pub checker_failures: u64,
    /// Largest ledger deviation from the admitted footprints (audit mode).
    pub max_conservation_error: f64,
    /// Events after which the ledger deviated (audit mode).
    pub conservation_violations: u64,
    /// The ledger was empty again after the last departure.
    pub drained_to_initial: bool,
    pub samples: Vec<Sample>,
}

impl RunMetrics {
    pub fn all(&self) -> TypeMetrics {
        self.by_type.get(ALL_TYPES).cloned().unwrap_or_default()
    }
}

/// Wall-clock solve times, kept apart from the deterministic metrics.
#[derive(Debug, Clone, Default)]
pub struct RunTiming {
    pub solve_times: BTreeMap<String, Vec<Duration>>,
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Arrival {
        time: f64,
        slice: u64,
        slice_type: String,
        admitted: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        cost: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
        active: usize,
    },
    Departure {
        time: f64,
        slice: u64,
        active: usize,
    },
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: RunMetrics,
    pub timing: RunTiming,
    pub events: Vec<Event>,
}

#[derive(PartialEq)]
struct Departure {
    time: f64,
    slice: u64,
}

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Departure {
    // Reversed: the heap pops the earliest departure, lowest id first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.slice.cmp(&self.slice))
    }
}

struct Run<'a> {
    scenario: &'a Scenario,
    options: &'a RunOptions,
    horizon: f64,
    state: ResidualState,
    admitted: BTreeMap<u64, (&'a SliceRequest, Embedding)>,
    departures: BinaryHeap<Departure>,
    metrics: RunMetrics,
    events: Vec<Event>,
    clock: f64,
    area: f64,
    next_sample: f64,
}

impl<'a> Run<'a> {
    /// Advances the clock, integrating the active count up to the horizon
    /// and emitting due samples.
    fn advance(&mut self, to: f64) {
        let active = self.admitted.len();
        if self.options.sample_interval > 0.0 {
            while self.next_sample <= to && self.next_sample <= self.horizon {
                let net = &self.scenario.network;
                self.metrics.samples.push(Sample {
                    time: self.next_sample,
                    active,
                    mean_link_utilization: self.state.mean_link_utilization(net),
                    max_link_utilization: self.state.max_link_utilization(net),
                    mean_node_utilization: self.state.mean_node_utilization(net),
                });
                self.next_sample += self.options.sample_interval;
            }
        }
        let lo = self.clock.min(self.horizon);
        let hi = to.min(self.horizon);
        if hi > lo {
            self.area += active as f64 * (hi - lo);
        }
        self.clock = to;
    }

    fn audit(&mut self) {
        if !self.options.audit {
            return;
        }
        let footprints: Vec<Footprint> = self
            .admitted
            .values()
            .map(|(slice, emb)| Footprint::of_embedding(self.scenario, slice, emb))
            .collect();
        let err = self.state.discrepancy(&footprints);
        if err != 0.0 {
            self.metrics.conservation_violations += 1;
        }
        self.metrics.max_conservation_error = self.metrics.max_conservation_error.max(err);
    }

    fn depart_until(&mut self, t: f64) {
        while self.departures.peek().is_some_and(|d| d.time <= t) {
            let d = self.departures.pop().expect("peeked");
            self.advance(d.time);
            self.admitted.remove(&d.slice);
            self.state
                .release(d.slice)
                .expect("every scheduled departure is active");
            if self.options.trace {
                self.events.push(Event::Departure {
                    time: d.time,
                    slice: d.slice,
                    active: self.admitted.len(),
                });
            }
            self.audit();
        }
    }
}

/// Simulates `trace` (requests in arrival order) with `engine`.
///
/// Arrivals after `horizon` are ignored. Departures are processed until
/// the system is empty, so the final ledger can be compared with the
/// initial one; time averages cover `[0, horizon]` only.
pub fn run(
    scenario: &Scenario,
    trace: &[SliceRequest],
    horizon: f64,
    engine: &Engine,
    options: &RunOptions,
) -> RunResult {
    let started = std::time::Instant::now();
    let mut r = Run {
        scenario,
        options,
        horizon,
        state: ResidualState::new(&scenario.network),
        admitted: BTreeMap::new(),
        departures: BinaryHeap::new(),
        metrics: RunMetrics::default(),
        events: Vec::new(),
        clock: 0.0,
        area: 0.0,
        next_sample: 0.0,
    };
    r.metrics
        .by_type
        .insert(ALL_TYPES.to_string(), TypeMetrics::default());
    let mut timing = RunTiming::default();

    for slice in trace.iter().filter(|s| s.arrival_time < horizon) {
        r.depart_until(slice.arrival_time);
        r.advance(slice.arrival_time);
        let kind = slice.slice_type.clone().unwrap_or_else(|| "untyped".into());
        let decision = engine.admit(scenario, &r.state, slice);
        timing
            .solve_times
            .entry(kind.clone())
            .or_default()
            .push(decision.stats.wall_time);

        let mut outcome = decision.outcome.map_err(|b| b.tag().to_string());
        if let Ok(adm) = &outcome {
            if options.verify && check_embedding(scenario, &r.state, slice, &adm.embedding).is_err()
            {
                r.metrics.checker_failures += 1;
                outcome = Err("checker_rejected".into());
            }
        }
        if let Ok(adm) = &outcome {
            if r.state
                .reserve_embedding(scenario, slice, &adm.embedding)
                .is_err()
            {
                outcome = Err("reserve_failed".into());
            }
        }
        let (cost, reason, non_optimal) = match &outcome {
            Ok(adm) => (Some(adm.embedding.total_cost), None, !adm.optimal),
            Err(tag) => (None, Some(tag.clone()), false),
        };
        for key in [ALL_TYPES.to_string(), kind.clone()] {
            let m = r.metrics.by_type.entry(key).or_default();
            m.offered += 1;
            match (&cost, &reason) {
                (Some(c), _) => {
                    m.accepted += 1;
                    m.cost_sum += c;
                    m.non_optimal += u64::from(non_optimal);
                }
                (None, Some(tag)) => {
                    m.blocked += 1;
                    *m.blocked_by_reason.entry(tag.clone()).or_default() += 1;
                }
                (None, None) => unreachable!("outcome is either admitted or blocked"),
            }
        }
        if let Ok(adm) = outcome {
            r.departures.push(Departure {
                time: slice.arrival_time + slice.holding_time,
                slice: slice.id,
            });
            r.admitted.insert(slice.id, (slice, adm.embedding));
        }
        r.metrics.max_concurrent = r.metrics.max_concurrent.max(r.admitted.len());
        if options.trace {
            r.events.push(Event::Arrival {
                time: slice.arrival_time,
                slice: slice.id,
                slice_type: kind,
                admitted: cost.is_some(),
                cost,
                reason,
                active: r.admitted.len(),
            });
        }
        r.audit();
    }
    r.depart_until(horizon);
    r.advance(horizon);
    r.depart_until(f64::INFINITY);
    r.metrics.mean_concurrent = r.area / horizon;
    r.metrics.drained_to_initial = r.state.is_pristine();
    timing.total = started.elapsed();
    RunResult {
        metrics: r.metrics,
        timing,
        events: r.events,
    }
}

/// Tags of every [`Blocked`] reason plus the simulator's own.
pub fn block_tags() -> Vec<&'static str> {
    let mut tags: Vec<&'static str> = [
        Blocked::Untrustable,
        Blocked::UnreachableEndpoints { service: 0 },
        Blocked::NoPlacement {
            service: 0,
            position: 0,
        },
        Blocked::NoCandidatePath { service: 0 },
        Blocked::Infeasible,
        Blocked::TimeLimit,
        Blocked::SolverFailure {
            detail: String::new(),
        },
    ]
    .iter()
    .map(Blocked::tag)
    .collect();
    tags.extend(["checker_rejected", "reserve_failed"]);
    tags
}
