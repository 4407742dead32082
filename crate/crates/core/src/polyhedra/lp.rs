//! Linear programs over H-representations, routed through the conic solver.

use nalgebra::DVector;

use crate::conic::{ConicProgram, ConicSolver, InteriorPointSolver, LinExpr, SolveStatus, VarKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: DVector<f64> },
    Infeasible,
    Unbounded,
}

/// Maximizes `cᵀx` subject to `aᵀx ≤ b` for every row.
pub fn maximize(n: usize, c: &DVector<f64>, rows: &[(DVector<f64>, f64)]) -> Result<LpOutcome> {
    let mut p = ConicProgram::new();
    let x = p.add_vars(VarKind::Free, n);
    for (a, b) in rows {
        let mut e = LinExpr::constant(*b);
        for (k, &v) in x.iter().enumerate() {
            if a[k] != 0.0 {
                e.add_term(v, -a[k]);
            }
        }
        p.add_inequality(e);
    }
    let mut obj = LinExpr::default();
    for (k, &v) in x.iter().enumerate() {
        if c[k] != 0.0 {
            obj.add_term(v, c[k]);
        }
    }
    p.set_objective(obj);
    let sol = InteriorPointSolver::default().solve(&p);
    match sol.status {
        SolveStatus::Optimal => Ok(LpOutcome::Optimal {
            value: sol.objective,
            x: DVector::from_iterator(n, x.iter().map(|&v| sol.value(v))),
        }),
        SolveStatus::Infeasible => Ok(LpOutcome::Infeasible),
        SolveStatus::Unbounded => Ok(LpOutcome::Unbounded),
        SolveStatus::NumericalFailure => Err(Error::NumericalFailure(format!(
            "linear program with {} rows did not converge",
            rows.len()
        ))),
    }
}
