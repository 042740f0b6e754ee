use std::time::Instant;

use crate::model::{IlpModel, VarKind};
use crate::{IlpSolution, MilpError, SolveStatus, EPS_FEAS};

/// Largest model [`enumerate_oracle`] accepts.
pub const MAX_ENUMERATED_BINARIES: usize = 22;

/// Exhaustive scan over every 0/1 assignment.
///
/// Walks the assignments in Gray-code order so each step flips one
/// variable and row activities are updated incrementally. Ties keep the
/// first assignment in that order.
pub fn enumerate_oracle(model: &IlpModel) -> Result<IlpSolution, MilpError> {
    model.validate()?;
    let n = model.num_vars();
    if model.vars().iter().any(|v| v.kind != VarKind::Binary) {
        return Err(MilpError::TooLarge(
            "enumeration supports binary variables only".into(),
        ));
    }
    if n > MAX_ENUMERATED_BINARIES {
        return Err(MilpError::TooLarge(format!(
            "{n} binaries exceed the enumeration limit of {MAX_ENUMERATED_BINARIES}"
        )));
    }
    let start = Instant::now();

    // Column-wise view of the rows.
    let cons = model.constraints();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, c) in cons.iter().enumerate() {
        for &(v, a) in &c.terms {
            columns[v.0].push((i, a));
        }
    }
    let tol: Vec<f64> = cons
        .iter()
        .map(|c| EPS_FEAS * (1.0 + c.rhs.abs()))
        .collect();
    let fixed_ok = |j: usize, value: f64| {
        let v = &model.vars()[j];
        value >= v.lower && value <= v.upper
    };

    let mut values = vec![0.0; n];
    let mut activity = vec![0.0; cons.len()];
    let mut objective = 0.0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let total: u64 = 1 << n;
    for step in 0..total {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            let delta = if values[j] == 0.0 { 1.0 } else { -1.0 };
            values[j] += delta;
            objective += delta * model.vars()[j].objective;
            for &(i, a) in &columns[j] {
                activity[i] += delta * a;
            }
        }
        if best.as_ref().is_some_and(|(_, b)| objective >= *b) {
            continue;
        }
        let rows_ok =
            cons.iter()
                .zip(&activity)
                .zip(&tol)
                .all(|((c, &act), &t)| match c.relation {
                    crate::Relation::Le => act <= c.rhs + t,
                    crate::Relation::Ge => act >= c.rhs - t,
                    crate::Relation::Eq => (act - c.rhs).abs() <= t,
                });
        if rows_ok && values.iter().enumerate().all(|(j, &x)| fixed_ok(j, x)) {
            // Recompute exactly rather than trusting the running sum.
            let exact = model.objective_value(&values);
            if best.as_ref().is_none_or(|(_, b)| exact < *b) {
                best = Some((values.clone(), exact));
            }
        }
    }

    let wall_time = start.elapsed();
    Ok(match best {
        Some((values, objective)) => IlpSolution {
            status: SolveStatus::Optimal,
            values,
            objective,
            nodes: total as usize,
            wall_time,
        },
        None => IlpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective: f64::INFINITY,
            nodes: total as usize,
            wall_time,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Relation;

    #[test]
    fn empty_model_has_zero_objective() {
        let s = enumerate_oracle(&IlpModel::new()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, 0.0);
        assert!(s.values.is_empty());
    }

    #[test]
    fn negative_cost_binary_is_set() {
        let mut m = IlpModel::new();
        m.add_binary("x", -4.0);
        let s = enumerate_oracle(&m).unwrap();
        assert_eq!(s.values, vec![1.0]);
        assert_eq!(s.objective, -4.0);
    }

    #[test]
    fn size_guard() {
        let mut m = IlpModel::new();
        for i in 0..23 {
            m.add_binary(format!("x{i}"), 1.0);
        }
        assert!(matches!(enumerate_oracle(&m), Err(MilpError::TooLarge(_))));
        let mut m = IlpModel::new();
        m.add_continuous("y", 0.0, 1.0, 1.0);
        assert!(matches!(enumerate_oracle(&m), Err(MilpError::TooLarge(_))));
    }

    #[test]
    fn respects_fixed_bounds_and_rows() {
        let mut m = IlpModel::new();
        let a = m.add_binary("a", -1.0);
        let b = m.add_binary("b", -1.0);
        m.add_constraint("one", [(a, 1.0), (b, 1.0)], Relation::Le, 1.0);
        let s = enumerate_oracle(&m).unwrap();
        assert_eq!(s.objective, -1.0);
    }
}
