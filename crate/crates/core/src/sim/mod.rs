//! Scenario generation, workload traces and the discrete-event simulator.

pub mod compare;
pub mod gen;
pub mod output;
pub mod run;
pub mod workload;

pub use compare::{compare, Cell};
pub use gen::{generate_scenario, GenError, ScenarioGen, CONGESTION_REGIMES};
pub use output::{simulate, write_run, RunConfig};
pub use run::{run, Event, RunMetrics, RunOptions, RunResult, RunTiming, TypeMetrics, ALL_TYPES};
pub use workload::{generate_trace, sample_slice};
