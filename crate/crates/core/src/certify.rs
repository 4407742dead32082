//! Copositivity of a quadratic form over a polyhedral cone, certified by
//! nonnegative multipliers on pairwise products of the cone's inequalities.
//!
//! For a cone `{x : aᵢᵀx ≤ 0}` every product `(aᵢᵀx)(aⱼᵀx)` is nonnegative on
//! the cone, so `Q − Σ_{i<j} λᵢⱼ (aᵢaⱼᵀ + aⱼaᵢᵀ) ⪰ 0` with `λ ≥ 0` implies
//! `xᵀQx ≥ 0` there. The test is sufficient only.

use nalgebra::DVector;
use rand::Rng;

use crate::conic::{
    ConicProgram, ConicSolver, InteriorPointSolver, LinExpr, Solution, SolveStatus, SymExpr, VarId,
    VarKind,
};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, SymmetricMatrix};
use crate::polyhedra::HPolyhedron;
use crate::sampling;

/// Only the first level of the hierarchy is implemented.
pub const SUPPORTED_LEVEL: usize = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CopositivityCertificate {
    /// `((i, j), λᵢⱼ)` for every pair `i < j` of cone rows.
    pub lambda: Vec<((usize, usize), f64)>,
    pub psd_witness: SymmetricMatrix,
}

/// Handles to the variables introduced by [`encode_copositivity`].
#[derive(Clone, Debug, PartialEq)]
pub struct CopositivityBlock {
    pub lambda: Vec<((usize, usize), VarId)>,
    pub witness: SymExpr,
}

impl CopositivityBlock {
    pub fn certificate(&self, sol: &Solution) -> Result<CopositivityCertificate> {
        let lambda = self
            .lambda
            .iter()
            .map(|&(ij, v)| (ij, sol.value(v)))
            .collect();
        Ok(CopositivityCertificate {
            lambda,
            psd_witness: self.witness.eval(&sol.x),
        })
    }
}

fn pair_matrix(a: &DVector<f64>, b: &DVector<f64>) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(a.len(), |k, l| a[k] * b[l] + b[k] * a[l])
}

/// Adds `q − Σ λᵢⱼ (aᵢaⱼᵀ + aⱼaᵢᵀ) ⪰ 0` with fresh `λᵢⱼ ≥ 0` to `program`.
///
/// With fewer than two rows the sum is empty and this is a plain PSD constraint.
pub fn encode_copositivity(
    program: &mut ConicProgram,
    q: &SymExpr,
    cone: &HPolyhedron,
    level: usize,
) -> Result<CopositivityBlock> {
    if level != SUPPORTED_LEVEL {
        return Err(Error::UnsupportedHierarchyLevel(level));
    }
    if !cone.is_cone() {
        return Err(Error::InvalidInput("copositivity needs a cone".into()));
    }
    if cone.ambient_dim() != q.dim {
        return Err(Error::DimensionMismatch(format!(
            "cone in dimension {}, form of size {}",
            cone.ambient_dim(),
            q.dim
        )));
    }
    let rows: Vec<&DVector<f64>> = cone.rows().iter().map(|(a, _)| a).collect();
    let mut witness = q.clone();
    let mut lambda = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let v = program.add_var(VarKind::Nonneg);
            let p = pair_matrix(rows[i], rows[j]);
            for k in 0..q.dim {
                for l in k..q.dim {
                    let c = p.get(k, l);
                    if c != 0.0 {
                        witness.get_mut(k, l).add_term(v, -c);
                    }
                }
            }
            lambda.push(((i, j), v));
        }
    }
    program.add_psd_block(witness.clone());
    Ok(CopositivityBlock { lambda, witness })
}

/// Certificate for a fixed matrix, if the first level finds one.
///
/// Maximizes `t ≤ 1` subject to `Q − Σ λ(…) − tI ⪰ 0`. The multipliers the
/// solver returns are clipped at zero and the witness `Q − Σ λ(…)` is
/// recomputed and checked to be PSD within `tol`, so a stalled solve whose
/// iterate is already a certificate is still accepted.
pub fn certify_copositive(
    q: &SymmetricMatrix,
    cone: &HPolyhedron,
    tol: f64,
) -> Result<Option<CopositivityCertificate>> {
    let n = q.dim();
    let mut p = ConicProgram::new();
    let t = p.add_var(VarKind::Free);
    let mut form = SymExpr::from_constant(q);
    for k in 0..n {
        form.get_mut(k, k).add_term(t, -1.0);
    }
    let block = encode_copositivity(&mut p, &form, cone, SUPPORTED_LEVEL)?;
    p.add_inequality(LinExpr::constant(1.0).minus(&LinExpr::var(t)));
    p.set_objective(LinExpr::var(t));
    let sol = InteriorPointSolver::default().solve(&p);
    match sol.status {
        SolveStatus::Optimal | SolveStatus::NumericalFailure => {
            let rows: Vec<&DVector<f64>> = cone.rows().iter().map(|(a, _)| a).collect();
            let mut witness = q.clone();
            let mut lambda = Vec::with_capacity(block.lambda.len());
            for &((i, j), v) in &block.lambda {
                let l = sol.value(v).max(0.0);
                witness = witness.sub(&pair_matrix(rows[i], rows[j]).scale(l));
                lambda.push(((i, j), l));
            }
            if min_eigenvalue(&witness) >= -tol {
                return Ok(Some(CopositivityCertificate {
                    lambda,
                    psd_witness: witness,
                }));
            }
            if sol.status == SolveStatus::Optimal {
                return Ok(None);
            }
            Err(Error::NumericalFailure(
                "certificate search did not converge".into(),
            ))
        }
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Unbounded => Err(Error::NumericalFailure(
            "certificate search reported an unbounded program".into(),
        )),
    }
}

/// `min xᵀQx` over unit-norm samples of the cone (nonnegative combinations
/// of its generators, plus the generators themselves).
pub fn verify_copositivity_pointwise(
    q: &SymmetricMatrix,
    cone: &HPolyhedron,
    n_samples: usize,
) -> Result<f64> {
    let v = cone.to_vrep()?;
    let gens = v.rays;
    if gens.is_empty() {
        return Ok(0.0);
    }
    let mut rng = sampling::rng(0xC0_0C);
    let mut worst = f64::INFINITY;
    let mut consider = |x: DVector<f64>| {
        let norm = x.norm();
        if norm > 1e-12 {
            let x = x / norm;
            worst = worst.min(q.quad_form(&x));
        }
    };
    for g in &gens {
        consider(g.clone());
    }
    for _ in 0..n_samples {
        let mut x = DVector::zeros(q.dim());
        for g in &gens {
            // Sparse weights reach the lower-dimensional faces too.
            let w: f64 = if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                -rng.random::<f64>().ln()
            };
            x += g * w;
        }
        consider(x);
    }
    Ok(worst)
}
