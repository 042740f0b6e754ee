//! Dense bounded-variable primal simplex.
//!
//! Every row is turned into an equality by a slack column; rows whose slack
//! cannot start basic at a feasible value receive an artificial column and
//! are driven to feasibility in a first phase. Nonbasic columns sit at one of
//! their bounds (or at zero when free), so binary upper bounds never become
//! explicit rows.

use crate::model::{IlpModel, Relation};
use crate::{MilpError, EPS_FEAS};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
/// Degenerate pivots tolerated before switching to Bland's rule.
const BLAND_AFTER: usize = 1000;
const REFRESH_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration limit hit or the final point failed the feasibility audit.
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the model's variables; meaningful only when optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Solves the continuous relaxation of `model` (binaries relaxed to [0, 1]).
pub fn solve_lp_relaxation(model: &IlpModel) -> Result<LpSolution, MilpError> {
    model.validate()?;
    let lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    Ok(solve_with_bounds(model, &lower, &upper))
}

/// Solves the relaxation with the variable bounds replaced by
/// `lower`/`upper`. The model is assumed valid.
pub(crate) fn solve_with_bounds(model: &IlpModel, lower: &[f64], upper: &[f64]) -> LpSolution {
    let n = model.num_vars();
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return LpSolution {
            status: LpStatus::Infeasible,
            values: vec![0.0; n],
            objective: f64::NAN,
            iterations: 0,
        };
    }
    let mut tab = Tableau::build(model, lower, upper);
    let status = tab.run();
    let values: Vec<f64> = tab.x[..n].to_vec();
    let mut status = status;
    if status == LpStatus::Optimal {
        // Audit against the original rows and bounds.
        let scale = |b: f64| EPS_FEAS * (1.0 + b.abs());
        let rows_ok = model
            .constraints()
            .iter()
            .all(|c| c.violation(&values) <= scale(c.rhs));
        let bounds_ok = values
            .iter()
            .zip(lower.iter().zip(upper))
            .all(|(&x, (&l, &u))| x >= l - scale(l) && x <= u + scale(u));
        if !(rows_ok && bounds_ok) {
            status = LpStatus::NumericalFailure;
        }
    }
    let objective = if status == LpStatus::Optimal {
        model.objective_value(&values)
    } else {
        f64::NAN
    };
    LpSolution {
        status,
        values,
        objective,
        iterations: tab.iterations,
    }
}

const NOT_BASIC: usize = usize::MAX;

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols` matrix holding B^-1 A.
    tab: Vec<f64>,
    /// Right-hand side after row sign normalization.
    rhs: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    /// Column that formed the identity in row i of the starting basis.
    start_basis: Vec<usize>,
    phase2_cost: Vec<f64>,
    first_artificial: usize,
    d: Vec<f64>,
    iterations: usize,
    degenerate: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Progress,
}

impl Tableau {
    fn build(model: &IlpModel, lower: &[f64], upper: &[f64]) -> Self {
        let n = model.num_vars();
        let cons = model.constraints();
        let m = cons.len();
        let slack_count = cons.iter().filter(|c| c.relation != Relation::Eq).count();

        // Starting values of the structural columns.
        let start_value = |j: usize| {
            if lower[j].is_finite() {
                lower[j]
            } else if upper[j].is_finite() {
                upper[j]
            } else {
                0.0
            }
        };

        // Decide which rows need an artificial column.
        let mut residual = Vec::with_capacity(m);
        let mut needs_artificial = Vec::with_capacity(m);
        for c in cons {
            let act: f64 = c.terms.iter().map(|&(v, a)| a * start_value(v.0)).sum();
            let r = c.rhs - act;
            residual.push(r);
            needs_artificial.push(match c.relation {
                Relation::Le => r < 0.0,
                Relation::Ge => r > 0.0,
                Relation::Eq => true,
            });
        }
        let art_count = needs_artificial.iter().filter(|&&b| b).count();
        let cols = n + slack_count + art_count;
        let first_artificial = n + slack_count;

        let mut tab = vec![0.0; m * cols];
        let mut rhs = vec![0.0; m];
        let mut lo = Vec::with_capacity(cols);
        let mut hi = Vec::with_capacity(cols);
        let mut x = vec![0.0; cols];
        lo.extend_from_slice(lower);
        hi.extend_from_slice(upper);
        for (j, xj) in x.iter_mut().enumerate().take(n) {
            *xj = start_value(j);
        }
        lo.extend(std::iter::repeat_n(0.0, slack_count + art_count));
        hi.extend(std::iter::repeat_n(f64::INFINITY, slack_count + art_count));

        let mut basis = vec![0; m];
        let mut start_basis = vec![0; m];
        let mut slack_col = n;
        let mut art_col = first_artificial;
        for (i, c) in cons.iter().enumerate() {
            let slack_sign = match c.relation {
                Relation::Le => Some(1.0),
                Relation::Ge => Some(-1.0),
                Relation::Eq => None,
            };
            let r = residual[i];
            // Row sign so that the starting basic column has coefficient +1.
            let sign = if needs_artificial[i] {
                if r >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                slack_sign.unwrap_or(1.0)
            };
            let row = &mut tab[i * cols..(i + 1) * cols];
            for &(v, a) in &c.terms {
                row[v.0] = sign * a;
            }
            rhs[i] = sign * c.rhs;
            let this_slack = slack_sign.map(|s| {
                row[slack_col] = sign * s;
                slack_col += 1;
                slack_col - 1
            });
            if needs_artificial[i] {
                row[art_col] = 1.0;
                basis[i] = art_col;
                x[art_col] = r.abs();
                art_col += 1;
            } else {
                let s = this_slack.expect("inequality rows carry a slack");
                basis[i] = s;
                x[s] = r.abs();
            }
            start_basis[i] = basis[i];
        }

        let mut row_of = vec![NOT_BASIC; cols];
        for (i, &b) in basis.iter().enumerate() {
            row_of[b] = i;
        }
        let mut phase2_cost = vec![0.0; cols];
        for (j, v) in model.vars().iter().enumerate() {
            phase2_cost[j] = v.objective;
        }

        Tableau {
            rows: m,
            cols,
            tab,
            rhs,
            lo,
            hi,
            x,
            basis,
            row_of,
            start_basis,
            phase2_cost,
            first_artificial,
            d: vec![0.0; cols],
            iterations: 0,
            degenerate: 0,
        }
    }

    fn run(&mut self) -> LpStatus {
        let limit = 50_000 + 50 * (self.rows + self.cols);
        if self.first_artificial < self.cols {
            let mut cost = vec![0.0; self.cols];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            match self.optimize(&cost, limit) {
                Some(Step::Optimal) => {}
                Some(_) => return LpStatus::NumericalFailure,
                None => return LpStatus::NumericalFailure,
            }
            let infeasibility: f64 = self.x[self.first_artificial..].iter().sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeasibility > 1e-9 * scale {
                return LpStatus::Infeasible;
            }
            for j in self.first_artificial..self.cols {
                self.hi[j] = 0.0;
                if self.row_of[j] == NOT_BASIC {
                    self.x[j] = 0.0;
                }
            }
        }
        let cost = std::mem::take(&mut self.phase2_cost);
        let step = self.optimize(&cost, limit);
        self.phase2_cost = cost;
        match step {
            Some(Step::Optimal) => {
                self.refresh_basic_values();
                LpStatus::Optimal
            }
            Some(Step::Unbounded) => LpStatus::Unbounded,
            _ => LpStatus::NumericalFailure,
        }
    }

    /// Runs simplex iterations for `cost` until optimal or unbounded;
    /// `None` when the iteration limit is exhausted.
    fn optimize(&mut self, cost: &[f64], limit: usize) -> Option<Step> {
        self.compute_reduced_costs(cost);
        loop {
            if self.iterations >= limit {
                return None;
            }
            self.iterations += 1;
            if self.iterations.is_multiple_of(REFRESH_EVERY) {
                self.refresh_basic_values();
            }
            match self.iterate() {
                Step::Progress => continue,
                other => return Some(other),
            }
        }
    }

    fn compute_reduced_costs(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[i * self.cols..(i + 1) * self.cols];
            for (dj, &t) in self.d.iter_mut().zip(row) {
                *dj -= cb * t;
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// x_B = B^-1 b - sum over nonbasic j of (B^-1 A_j) x_j.
    fn refresh_basic_values(&mut self) {
        let cols = self.cols;
        for i in 0..self.rows {
            let row = &self.tab[i * cols..(i + 1) * cols];
            let mut v: f64 = self
                .start_basis
                .iter()
                .zip(&self.rhs)
                .map(|(&c, &b)| row[c] * b)
                .sum();
            for (j, &t) in row.iter().enumerate() {
                if t != 0.0 && self.row_of[j] == NOT_BASIC && self.x[j] != 0.0 {
                    v -= t * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn bland(&self) -> bool {
        self.degenerate >= BLAND_AFTER
    }

    fn choose_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols {
            if self.row_of[j] != NOT_BASIC {
                continue;
            }
            let dj = self.d[j];
            let dir = if dj < -COST_TOL && self.x[j] < self.hi[j] {
                1.0
            } else if dj > COST_TOL && self.x[j] > self.lo[j] {
                -1.0
            } else {
                continue;
            };
            if self.bland() {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn iterate(&mut self) -> Step {
        let Some((q, dir)) = self.choose_entering() else {
            return Step::Optimal;
        };
        let cols = self.cols;

        // Ratio test: entering moves by dir * t, basic i moves by -dir * a_iq * t.
        let mut step = self.hi[q] - self.lo[q];
        let mut leave: Option<(usize, bool)> = None; // (row, hits upper bound)
        let mut leave_pivot = 0.0f64;
        for i in 0..self.rows {
            let a = self.tab[i * cols + q];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let b = self.basis[i];
            let (limit, to_upper) = if rate < 0.0 {
                if self.lo[b] == f64::NEG_INFINITY {
                    continue;
                }
                (((self.x[b] - self.lo[b]) / -rate).max(0.0), false)
            } else {
                if self.hi[b] == f64::INFINITY {
                    continue;
                }
                (((self.hi[b] - self.x[b]) / rate).max(0.0), true)
            };
            let better = match leave {
                None => limit < step,
                Some((r, _)) => {
                    if limit < step - 1e-12 {
                        true
                    } else if limit <= step + 1e-12 {
                        if self.bland() {
                            b < self.basis[r]
                        } else {
                            a.abs() > leave_pivot
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                step = limit.min(step);
                leave = Some((i, to_upper));
                leave_pivot = a.abs();
            }
        }
        if step == f64::INFINITY {
            return Step::Unbounded;
        }
        if step <= 1e-12 {
            self.degenerate += 1;
        }

        // Move along the edge.
        self.x[q] += dir * step;
        if step != 0.0 {
            for i in 0..self.rows {
                let a = self.tab[i * cols + q];
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= dir * a * step;
                }
            }
        }

        let Some((r, to_upper)) = leave else {
            // Bound flip of the entering column.
            self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            return Step::Progress;
        };

        let leaving = self.basis[r];
        self.x[leaving] = if to_upper {
            self.hi[leaving]
        } else {
            self.lo[leaving]
        };
        self.pivot(r, q);
        self.basis[r] = q;
        self.row_of[q] = r;
        self.row_of[leaving] = NOT_BASIC;
        Step::Progress
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.tab[r * cols + q];
        let mut pivot_row: Vec<f64> = self.tab[r * cols..(r + 1) * cols].to_vec();
        for v in pivot_row.iter_mut() {
            *v /= piv;
        }
        pivot_row[q] = 1.0;
        let nz: Vec<usize> = pivot_row
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > DROP_TOL)
            .map(|(j, _)| j)
            .collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let row = &mut self.tab[i * cols..(i + 1) * cols];
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            for &j in &nz {
                let v = row[j] - f * pivot_row[j];
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * pivot_row[j];
            }
        }
        self.d[q] = 0.0;
        self.tab[r * cols..(r + 1) * cols].copy_from_slice(&pivot_row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IlpModel;

    #[test]
    fn maximizes_single_binary() {
        let mut m = IlpModel::new();
        m.add_binary("x", -1.0);
        let s = solve_lp_relaxation(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.values, vec![1.0]);
        assert_eq!(s.objective, -1.0);
    }

    #[test]
    fn detects_bound_conflict() {
        let mut m = IlpModel::new();
        let x = m.add_binary("x", 0.0);
        m.add_constraint("c", [(x, 1.0)], Relation::Ge, 2.0);
        let s = solve_lp_relaxation(&m).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut m = IlpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY, -1.0);
        let y = m.add_continuous("y", 0.0, f64::INFINITY, 0.0);
        m.add_constraint("c", [(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        let s = solve_lp_relaxation(&m).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn handles_free_variables() {
        // min x s.t. x >= -3, x free.
        let mut m = IlpModel::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        m.add_constraint("c", [(x, 1.0)], Relation::Ge, -3.0);
        let s = solve_lp_relaxation(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn classic_two_variable_lp() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let mut m = IlpModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY, -3.0);
        let y = m.add_continuous("y", 0.0, f64::INFINITY, -5.0);
        m.add_constraint("a", [(x, 1.0)], Relation::Le, 4.0);
        m.add_constraint("b", [(y, 2.0)], Relation::Le, 12.0);
        m.add_constraint("c", [(x, 3.0), (y, 2.0)], Relation::Le, 18.0);
        let s = solve_lp_relaxation(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.values[0] - 2.0).abs() < 1e-9);
        assert!((s.values[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_rows_need_phase_one() {
        // min x + y s.t. x + y = 1.5, x - y = 0.5, x,y in [0,1] -> (1, 0.5).
        let mut m = IlpModel::new();
        let x = m.add_binary("x", 1.0);
        let y = m.add_binary("y", 1.0);
        m.add_constraint("sum", [(x, 1.0), (y, 1.0)], Relation::Eq, 1.5);
        m.add_constraint("diff", [(x, 1.0), (y, -1.0)], Relation::Eq, 0.5);
        let s = solve_lp_relaxation(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 1.0).abs() < 1e-9);
        assert!((s.values[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Highly degenerate: many identical rows through the origin.
        let mut m = IlpModel::new();
        let vars: Vec<_> = (0..6)
            .map(|i| m.add_binary(format!("x{i}"), -1.0 - i as f64))
            .collect();
        for k in 0..30 {
            let terms: Vec<_> = vars
                .iter()
                .enumerate()
                .map(|(i, &v)| (v, if (i + k) % 2 == 0 { 1.0 } else { -1.0 }))
                .collect();
            m.add_constraint(format!("r{k}"), terms, Relation::Le, 0.0);
        }
        let s = solve_lp_relaxation(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
    }
}
