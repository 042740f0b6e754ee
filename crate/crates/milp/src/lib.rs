//! Binary linear programming for per-request embedding problems.
//!
//! [`IlpModel`] holds a minimization problem over binary and continuous
//! variables. [`solve_lp_relaxation`] runs a dense bounded-variable simplex
//! on its relaxation, [`branch_and_bound`] solves it exactly, and
//! [`enumerate_oracle`] scans every assignment of small pure-binary models
//! for cross-checking. The [`Solver`] trait is the seam for plugging in an
//! external back end.

use std::time::Duration;

mod bnb;
mod enumerate;
mod model;
mod simplex;

pub use bnb::branch_and_bound;
pub use enumerate::{enumerate_oracle, MAX_ENUMERATED_BINARIES};
pub use model::{Constraint, IlpModel, Relation, VarId, VarKind, Variable};
pub use simplex::{solve_lp_relaxation, LpSolution, LpStatus};

/// Constraint feasibility tolerance.
pub const EPS_FEAS: f64 = 1e-6;
/// Distance from 0/1 below which a binary counts as integral.
pub const EPS_INT: f64 = 1e-6;
/// Relative objective tolerance.
pub const EPS_OBJ: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum MilpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model too large: {0}")]
    TooLarge(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The time limit stopped the search; `values` holds the best incumbent.
    TimeLimitBestIncumbent,
    TimeLimitNoIncumbent,
    /// Every open node failed for numerical reasons and no incumbent exists.
    NumericalFailure,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, Self::Optimal | Self::TimeLimitBestIncumbent)
    }
}

#[derive(Debug, Clone)]
pub struct IlpSolution {
    pub status: SolveStatus,
    /// One value per model variable; empty without a solution.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Branch-and-bound nodes (or assignments, for enumeration) examined.
    pub nodes: usize,
    pub wall_time: Duration,
}

impl IlpSolution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    /// True if the binary `var` is set in this solution.
    pub fn is_set(&self, var: VarId) -> bool {
        self.values[var.0] > 0.5
    }
}

/// A back end able to solve an [`IlpModel`] to optimality.
pub trait Solver: Send + Sync {
    fn solve(
        &self,
        model: &IlpModel,
        time_limit: Option<Duration>,
    ) -> Result<IlpSolution, MilpError>;
}

/// The built-in branch-and-bound solver.
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

impl Solver for BranchAndBound {
    fn solve(
        &self,
        model: &IlpModel,
        time_limit: Option<Duration>,
    ) -> Result<IlpSolution, MilpError> {
        branch_and_bound(model, time_limit)
    }
}
