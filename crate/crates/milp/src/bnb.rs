use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::model::{IlpModel, VarKind};
use crate::simplex::{solve_with_bounds, LpStatus};
use crate::{IlpSolution, MilpError, SolveStatus, EPS_FEAS, EPS_INT, EPS_OBJ};

/// An open subproblem: bound changes on binaries relative to the root.
#[derive(Debug, Clone)]
struct Node {
    /// Objective of the parent relaxation, a valid lower bound.
    bound: f64,
    seq: u64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: the smallest bound, then the oldest node, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    values: Vec<f64>,
    objective: f64,
}

/// Exact branch-and-bound over the binary variables of `model`.
///
/// Nodes are explored depth-first until the first incumbent is found and
/// best-first afterwards; branching picks the most fractional binary with
/// the lowest index on ties.
pub fn branch_and_bound(
    model: &IlpModel,
    time_limit: Option<Duration>,
) -> Result<IlpSolution, MilpError> {
    model.validate()?;
    let start = Instant::now();
    let root_lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let root_upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    let has_continuous = model.vars().iter().any(|v| v.kind == VarKind::Continuous);

    let mut incumbent: Option<Incumbent> = None;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut dive: Vec<Node> = Vec::new();
    let mut seq = 0u64;
    let mut nodes = 0usize;
    let mut lower = root_lower.clone();
    let mut upper = root_upper.clone();
    let mut timed_out = false;
    let mut numerical_trouble = false;

    dive.push(Node {
        bound: f64::NEG_INFINITY,
        seq,
        fixings: Vec::new(),
    });

    loop {
        let node = if incumbent.is_none() {
            match dive.pop() {
                Some(node) => node,
                None => match heap.pop() {
                    Some(node) => node,
                    None => break,
                },
            }
        } else {
            // Once an incumbent exists, dive leftovers join the best-first pool.
            heap.extend(dive.drain(..));
            match heap.pop() {
                Some(node) => node,
                None => break,
            }
        };
        if let Some(inc) = &incumbent {
            if node.bound >= inc.objective - prune_gap(inc.objective) {
                continue;
            }
        }
        if let Some(limit) = time_limit {
            if start.elapsed() >= limit {
                timed_out = true;
                break;
            }
        }

        nodes += 1;
        lower.copy_from_slice(&root_lower);
        upper.copy_from_slice(&root_upper);
        for &(j, v) in &node.fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let lp = solve_with_bounds(model, &lower, &upper);
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if nodes == 1 {
                    return Ok(IlpSolution {
                        status: SolveStatus::Unbounded,
                        values: Vec::new(),
                        objective: f64::NEG_INFINITY,
                        nodes,
                        wall_time: start.elapsed(),
                    });
                }
                // Bounded at the root implies bounded below in every child.
                numerical_trouble = true;
                continue;
            }
            LpStatus::NumericalFailure => {
                numerical_trouble = true;
                continue;
            }
        }
        if let Some(inc) = &incumbent {
            if lp.objective >= inc.objective - prune_gap(inc.objective) {
                continue;
            }
        }

        match most_fractional(model, &lp.values) {
            None => {
                let candidate = if has_continuous {
                    polish(model, &lp.values, &root_lower, &root_upper)
                } else {
                    Some(round_binaries(model, &lp.values))
                };
                if let Some(values) = candidate {
                    if is_feasible(model, &values) {
                        let objective = model.objective_value(&values);
                        if incumbent
                            .as_ref()
                            .is_none_or(|inc| objective < inc.objective)
                        {
                            incumbent = Some(Incumbent { values, objective });
                        }
                    } else {
                        numerical_trouble = true;
                    }
                }
            }
            Some(j) => {
                let frac = lp.values[j];
                let mut children = [0.0, 1.0];
                // Dive toward the nearer integer first.
                if frac >= 0.5 {
                    children.swap(0, 1);
                }
                let mut kids: Vec<Node> = children
                    .iter()
                    .map(|&v| {
                        seq += 1;
                        let mut fixings = node.fixings.clone();
                        fixings.push((j, v));
                        Node {
                            bound: lp.objective,
                            seq,
                            fixings,
                        }
                    })
                    .collect();
                if incumbent.is_none() {
                    // Stack order: the preferred child is pushed last.
                    kids.reverse();
                    dive.extend(kids);
                } else {
                    heap.extend(kids);
                }
            }
        }
    }

    let wall_time = start.elapsed();
    Ok(match incumbent {
        Some(inc) => IlpSolution {
            status: if timed_out {
                SolveStatus::TimeLimitBestIncumbent
            } else {
                SolveStatus::Optimal
            },
            values: inc.values,
            objective: inc.objective,
            nodes,
            wall_time,
        },
        None => IlpSolution {
            status: if timed_out {
                SolveStatus::TimeLimitNoIncumbent
            } else if numerical_trouble {
                SolveStatus::NumericalFailure
            } else {
                SolveStatus::Infeasible
            },
            values: Vec::new(),
            objective: f64::INFINITY,
            nodes,
            wall_time,
        },
    })
}

fn prune_gap(objective: f64) -> f64 {
    EPS_OBJ * objective.abs().max(1.0)
}

fn most_fractional(model: &IlpModel, values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut best_dist = EPS_INT;
    for (j, v) in model.vars().iter().enumerate() {
        if v.kind != VarKind::Binary {
            continue;
        }
        let dist = (values[j] - values[j].round()).abs();
        if dist > best_dist {
            best_dist = dist;
            best = Some(j);
        }
    }
    best
}

fn round_binaries(model: &IlpModel, values: &[f64]) -> Vec<f64> {
    model
        .vars()
        .iter()
        .zip(values)
        .map(|(v, &x)| {
            if v.kind == VarKind::Binary {
                x.round()
            } else {
                x
            }
        })
        .collect()
}

/// Re-solves for the continuous variables with every binary fixed at its
/// rounded value.
fn polish(model: &IlpModel, values: &[f64], lower: &[f64], upper: &[f64]) -> Option<Vec<f64>> {
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for (j, v) in model.vars().iter().enumerate() {
        if v.kind == VarKind::Binary {
            lo[j] = values[j].round();
            hi[j] = lo[j];
        }
    }
    let lp = solve_with_bounds(model, &lo, &hi);
    (lp.status == LpStatus::Optimal).then(|| round_binaries(model, &lp.values))
}

pub(crate) fn is_feasible(model: &IlpModel, values: &[f64]) -> bool {
    model
        .constraints()
        .iter()
        .all(|c| c.violation(values) <= EPS_FEAS * (1.0 + c.rhs.abs()))
        && model
            .vars()
            .iter()
            .zip(values)
            .all(|(v, &x)| x >= v.lower - EPS_FEAS && x <= v.upper + EPS_FEAS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Relation;

    #[test]
    fn integral_root_needs_one_node() {
        let mut m = IlpModel::new();
        let x = m.add_binary("x", 2.0);
        let y = m.add_binary("y", 3.0);
        m.add_constraint("cover", [(x, 1.0), (y, 1.0)], Relation::Ge, 1.0);
        let s = branch_and_bound(&m, None).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.nodes, 1);
        assert_eq!(s.objective, 2.0);
        assert_eq!(s.values, vec![1.0, 0.0]);
    }

    #[test]
    fn parity_conflict_is_infeasible() {
        // x1 + x2 = 1 and x1 = x2 has the LP point (0.5, 0.5) but no 0/1 point.
        let mut m = IlpModel::new();
        let a = m.add_binary("a", 1.0);
        let b = m.add_binary("b", 1.0);
        m.add_constraint("sum", [(a, 1.0), (b, 1.0)], Relation::Eq, 1.0);
        m.add_constraint("same", [(a, 1.0), (b, -1.0)], Relation::Eq, 0.0);
        let lp = crate::solve_lp_relaxation(&m).unwrap();
        assert_eq!(lp.status, LpStatus::Optimal);
        let s = branch_and_bound(&m, None).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(s.nodes >= 3);
    }

    #[test]
    fn mixed_model_polishes_continuous_part() {
        // min y - 2b s.t. y >= 1.5 b, y in [0, 10].
        let mut m = IlpModel::new();
        let b = m.add_binary("b", -2.0);
        let y = m.add_continuous("y", 0.0, 10.0, 1.0);
        m.add_constraint("link", [(y, 1.0), (b, -1.5)], Relation::Ge, 0.0);
        let s = branch_and_bound(&m, None).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective + 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_time_limit_reports_no_incumbent() {
        let mut m = IlpModel::new();
        m.add_binary("x", -1.0);
        let s = branch_and_bound(&m, Some(Duration::ZERO)).unwrap();
        assert_eq!(s.status, SolveStatus::TimeLimitNoIncumbent);
    }
}
