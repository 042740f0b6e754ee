//! Admission of one slice request with either formulation.

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use slicebed_milp::{BranchAndBound, IlpSolution, SolveStatus, Solver};

use crate::model::{Embedding, ResidualState, Scenario, SliceRequest};
use crate::paths::generate_candidates;
use crate::pricing::{PriceSnapshot, PricingPolicy};
use crate::{embed_nl, embed_pl};

/// Why a request was not admitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Blocked {
    /// The origin operator is denied by the request's own trust list.
    Untrustable,
    /// A service endpoint belongs to an untrusted operator.
    UnreachableEndpoints {
        service: usize,
    },
    /// No trusted node with room can host a VNF of the chain.
    NoPlacement {
        service: usize,
        position: usize,
    },
    /// A service has no candidate path.
    NoCandidatePath {
        service: usize,
    },
    /// The program has no feasible solution.
    Infeasible,
    /// The time limit expired before any feasible solution was found.
    TimeLimit,
    SolverFailure {
        detail: String,
    },
}

impl Blocked {
    pub fn tag(&self) -> &'static str {
        match self {
            Blocked::Untrustable => "untrustable",
            Blocked::UnreachableEndpoints { .. } => "unreachable_endpoints",
            Blocked::NoPlacement { .. } => "no_placement",
            Blocked::NoCandidatePath { .. } => "no_candidate_path",
            Blocked::Infeasible => "infeasible",
            Blocked::TimeLimit => "time_limit",
            Blocked::SolverFailure { .. } => "solver_failure",
        }
    }
}

impl std::fmt::Display for Blocked {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Blocked::UnreachableEndpoints { service } => {
                write!(f, "unreachable endpoints (service {service})")
            }
            Blocked::NoPlacement { service, position } => {
                write!(f, "no placement (service {service}, position {position})")
            }
            Blocked::NoCandidatePath { service } => {
                write!(f, "no candidate path (service {service})")
            }
            Blocked::SolverFailure { detail } => write!(f, "solver failure: {detail}"),
            other => f.write_str(other.tag()),
        }
    }
}

/// Size and effort of one admission attempt.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub variables: usize,
    pub constraints: usize,
    pub bnb_nodes: usize,
    /// Candidate paths per service (path–link only).
    pub candidates: Vec<usize>,
    /// Model construction plus solve, including candidate generation.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Admission {
    pub embedding: Embedding,
    /// Objective of the program at the returned solution.
    pub objective: f64,
    /// False when a time limit cut the search short.
    pub optimal: bool,
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub outcome: Result<Admission, Blocked>,
    pub stats: SolveStats,
}

impl Decision {
    pub fn is_admitted(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// Maps a solver result onto an admission outcome.
pub(crate) fn interpret(
    solution: &IlpSolution,
    decode: impl FnOnce(&IlpSolution) -> Embedding,
) -> Result<Admission, Blocked> {
    match solution.status {
        SolveStatus::Optimal | SolveStatus::TimeLimitBestIncumbent => Ok(Admission {
            embedding: decode(solution),
            objective: solution.objective,
            optimal: solution.status == SolveStatus::Optimal,
        }),
        SolveStatus::Infeasible => Err(Blocked::Infeasible),
        SolveStatus::TimeLimitNoIncumbent => Err(Blocked::TimeLimit),
        SolveStatus::Unbounded => Err(Blocked::SolverFailure {
            detail: "unbounded".into(),
        }),
        SolveStatus::NumericalFailure => Err(Blocked::SolverFailure {
            detail: "numerical failure".into(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum EngineKind {
    /// Node–link program over placement and per-link routing variables.
    Nl,
    /// Path–link program over `k` candidate paths per service.
    Pl { k: usize },
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EngineKind::Nl => f.write_str("nl"),
            EngineKind::Pl { k } => write!(f, "pl{k}"),
        }
    }
}

/// A formulation, a pricing policy and an ILP back end.
#[derive(Clone)]
pub struct Engine {
    pub kind: EngineKind,
    pub pricing: PricingPolicy,
    pub time_limit: Option<Duration>,
    solver: Arc<dyn Solver>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("kind", &self.kind)
            .field("pricing", &self.pricing)
            .field("time_limit", &self.time_limit)
            .finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(kind: EngineKind, pricing: PricingPolicy) -> Self {
        Self {
            kind,
            pricing,
            time_limit: None,
            solver: Arc::new(BranchAndBound),
        }
    }

    pub fn with_time_limit(mut self, limit: Option<Duration>) -> Self {
        self.time_limit = limit;
        self
    }

    pub fn with_solver(mut self, solver: Arc<dyn Solver>) -> Self {
        self.solver = solver;
        self
    }

    /// Prices every element at the current utilization.
    pub fn prices(&self, scenario: &Scenario, state: &ResidualState) -> PriceSnapshot {
        PriceSnapshot::take(&self.pricing, &scenario.network, state)
    }

    /// Tries to embed `slice` into the residual capacities of `state`.
    /// The state is not modified.
    pub fn admit(
        &self,
        scenario: &Scenario,
        state: &ResidualState,
        slice: &SliceRequest,
    ) -> Decision {
        let start = Instant::now();
        let prices = self.prices(scenario, state);
        let mut stats = SolveStats::default();
        let outcome = match self.kind {
            EngineKind::Nl => self.admit_nl(scenario, state, slice, &prices, &mut stats),
            EngineKind::Pl { k } => self.admit_pl(scenario, state, slice, &prices, k, &mut stats),
        };
        stats.wall_time = start.elapsed();
        Decision { outcome, stats }
    }

    fn admit_nl(
        &self,
        scenario: &Scenario,
        state: &ResidualState,
        slice: &SliceRequest,
        prices: &PriceSnapshot,
        stats: &mut SolveStats,
    ) -> Result<Admission, Blocked> {
        let nl = embed_nl::build_nl(scenario, state, slice, prices)?;
        stats.variables = nl.model.num_vars();
        stats.constraints = nl.model.num_constraints();
        let solution = self.run(&nl.model)?;
        stats.bnb_nodes = solution.nodes;
        interpret(&solution, |s| nl.decode(scenario, slice, prices, s))
    }

    fn admit_pl(
        &self,
        scenario: &Scenario,
        state: &ResidualState,
        slice: &SliceRequest,
        prices: &PriceSnapshot,
        k: usize,
        stats: &mut SolveStats,
    ) -> Result<Admission, Blocked> {
        let candidates = generate_candidates(scenario, state, slice, k, prices)
            .map_err(|_| Blocked::Untrustable)?;
        stats.candidates = candidates.iter().map(Vec::len).collect();
        let pl = embed_pl::build_pl(scenario, state, slice, prices, candidates)?;
        stats.variables = pl.model.num_vars();
        stats.constraints = pl.model.num_constraints();
        let solution = self.run(&pl.model)?;
        stats.bnb_nodes = solution.nodes;
        interpret(&solution, |s| pl.decode(slice, s))
    }

    fn run(&self, model: &slicebed_milp::IlpModel) -> Result<IlpSolution, Blocked> {
        self.solver
            .solve(model, self.time_limit)
            .map_err(|e| Blocked::SolverFailure {
                detail: e.to_string(),
            })
    }
}
