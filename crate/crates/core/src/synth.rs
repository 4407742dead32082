//! Synthesis of piecewise semi-ellipsoidal control invariant sets.
//!
//! The decision variables describe the polar side: on piece `Pᵢ` the gauge of
//! `S°` (equivalently the support function of `S`) is `√(xᵀQᵢx)`. Invariance is
//! imposed on the implicit form `E x⁺ = C x` through copositivity blocks, the
//! state constraint through the vertices of `X°`, and the gluing conditions
//! across neighboring pieces through linear constraints.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::certify::{encode_copositivity, CopositivityBlock, SUPPORTED_LEVEL};
pub use crate::conic::ConicProgram;
use crate::conic::{
    constraint_violation, ConicSolver, LinExpr, MatrixVar, SolveStatus, SymExpr, VarId, VarKind,
};
use crate::error::{Error, Result};
use crate::linalg::{eig_sym, rank, SymmetricMatrix};
use crate::polyhedra::{ConicPartition, HPolyhedron};
use crate::pwse::{PiecewiseSemiEllipsoid, Violation};
use crate::sampling;
use crate::systems::{
    check_switched_invariance, reduce_to_algebraic, InvarianceReport, SwitchedControlSystem,
};

const VERTEX_TOL: f64 = 1e-9;
/// Constraint violation accepted for a stalled solve judged degenerate.
const STALL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisProblem {
    pub system: SwitchedControlSystem,
    pub partition: ConicPartition,
    /// Region over which the squared support function is integrated.
    pub objective_polytope: HPolyhedron,
    pub level: usize,
}

impl SynthesisProblem {
    /// Problem with the objective integrated over the state constraint set.
    pub fn new(
        system: impl Into<SwitchedControlSystem>,
        partition: ConicPartition,
    ) -> Result<Self> {
        let system = system.into();
        let objective_polytope = system.x.clone();
        let p = Self {
            system,
            partition,
            objective_polytope,
            level: SUPPORTED_LEVEL,
        };
        p.check()?;
        Ok(p)
    }

    pub fn with_objective_polytope(mut self, p: HPolyhedron) -> Result<Self> {
        self.objective_polytope = p;
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let n = self.system.state_dim();
        if self.partition.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "partition in dimension {}, system in dimension {n}",
                self.partition.dim()
            )));
        }
        if self.objective_polytope.ambient_dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "objective polytope in dimension {}, system in dimension {n}",
                self.objective_polytope.ambient_dim()
            )));
        }
        if !self.partition.is_complete() {
            return Err(Error::NotCovering(
                "the synthesis partition has gaps".into(),
            ));
        }
        if !self.objective_polytope.is_empty()? && !self.objective_polytope.is_bounded()? {
            return Err(Error::InvalidInput(
                "the objective polytope must be bounded".into(),
            ));
        }
        Ok(())
    }
}

/// One copositivity block of the invariance constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceBlock {
    pub mode: usize,
    pub i: usize,
    pub j: usize,
    pub certificate: CopositivityBlock,
}

/// A program together with the handles needed to read a solution back.
#[derive(Clone, Debug, PartialEq)]
pub struct AssembledProgram {
    pub program: ConicProgram,
    pub q: Vec<MatrixVar>,
    /// One free vector per unordered neighbor pair.
    pub u: Vec<((usize, usize), Vec<VarId>)>,
    pub invariance: Vec<InvarianceBlock>,
    pub state_constraints: usize,
}

pub fn assemble(prob: &SynthesisProblem) -> Result<ConicProgram> {
    Ok(assemble_detailed(prob)?.program)
}

/// Same program as [`assemble`]; every mode contributes its own invariance blocks.
pub fn assemble_switched(prob: &SynthesisProblem) -> Result<ConicProgram> {
    assemble(prob)
}

pub fn assemble_detailed(prob: &SynthesisProblem) -> Result<AssembledProgram> {
    prob.check()?;
    let n = prob.system.state_dim();
    let part = &prob.partition;
    let m = part.len();
    let mut program = ConicProgram::new();
    let q: Vec<MatrixVar> = (0..m).map(|_| program.add_psd_matrix(n)).collect();
    let qe: Vec<SymExpr> = q.iter().map(|v| v.expr()).collect();

    let mut invariance = Vec::new();
    let mut any_rows = false;
    for mode in 0..prob.system.modes.len() {
        let alg = reduce_to_algebraic(&prob.system.mode(mode));
        let r = alg.rows();
        if r == 0 {
            continue;
        }
        any_rows = true;
        let pulled = |m: &DMatrix<f64>, piece: &HPolyhedron| -> Vec<DVector<f64>> {
            piece.rows().iter().map(|(a, _)| m * a).collect()
        };
        let from: Vec<_> = part.pieces().iter().map(|p| pulled(&alg.c, p)).collect();
        let to: Vec<_> = part.pieces().iter().map(|p| pulled(&alg.e, p)).collect();
        let ce: Vec<SymExpr> = qe.iter().map(|x| x.congruence(&alg.c)).collect();
        let ee: Vec<SymExpr> = qe.iter().map(|x| x.congruence(&alg.e)).collect();
        for i in 0..m {
            for j in 0..m {
                let rows: Vec<DVector<f64>> = from[i].iter().chain(&to[j]).cloned().collect();
                let cone = HPolyhedron::cone(r, rows)?;
                if cone.dim() < 1 {
                    continue;
                }
                let mut form = ee[j].clone();
                form.add_scaled(&ce[i], -1.0);
                let certificate = encode_copositivity(&mut program, &form, &cone, prob.level)?;
                invariance.push(InvarianceBlock {
                    mode,
                    i,
                    j,
                    certificate,
                });
            }
        }
    }
    if any_rows && invariance.is_empty() {
        return Err(Error::EmptyIntersectionEverywhere);
    }

    // vᵀQᵢv ≤ 1 at the vertices a/b of the polar of X lying in Pᵢ.
    let mut state_constraints = 0;
    for (a, b) in prob.system.x.remove_redundancy()?.rows() {
        let v = a / *b;
        for i in part.containing(&v, VERTEX_TOL) {
            program.add_inequality(LinExpr::constant(1.0).minus(&qe[i].quad(&v)));
            state_constraints += 1;
        }
    }

    let mut u = Vec::new();
    for nb in part.neighbors() {
        let uv = program.add_vars(VarKind::Free, n);
        let nv = &nb.normal;
        for k in 0..n {
            for l in k..n {
                let mut e = qe[nb.i].get(k, l).clone();
                e.add_scaled(qe[nb.j].get(k, l), -1.0);
                e.add_term(uv[k], -nv[l]);
                e.add_term(uv[l], -nv[k]);
                program.add_equality(e);
            }
        }
        for v in &nb.face_rays {
            let e = qe[nb.i].bilinear(nv, v).minus(&qe[nb.j].bilinear(nv, v));
            program.add_inequality(e);
        }
        u.push(((nb.i, nb.j), uv));
    }

    program.set_objective(integrate_quadratic(&qe, &prob.objective_polytope, part)?);
    Ok(AssembledProgram {
        program,
        q,
        u,
        invariance,
        state_constraints,
    })
}

/// `∫_{polytope} xᵀQ_{piece(x)}x dx` as a linear expression in the entries of the `Qᵢ`.
pub fn integrate_quadratic(
    q: &[SymExpr],
    polytope: &HPolyhedron,
    partition: &ConicPartition,
) -> Result<LinExpr> {
    if q.len() != partition.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} matrices for {} pieces",
            q.len(),
            partition.len()
        )));
    }
    let moments = second_moments(polytope, partition)?;
    let mut out = LinExpr::default();
    for (qi, mi) in q.iter().zip(&moments) {
        let n = mi.dim();
        for k in 0..n {
            for l in k..n {
                let w = if k == l { 1.0 } else { 2.0 };
                out.add_scaled(qi.get(k, l), w * mi.get(k, l));
            }
        }
    }
    out.compact();
    Ok(out)
}

/// `∫ xxᵀ dx` over `polytope ∩ Pᵢ` for every piece.
pub fn second_moments(
    polytope: &HPolyhedron,
    partition: &ConicPartition,
) -> Result<Vec<SymmetricMatrix>> {
    partition
        .pieces()
        .iter()
        .map(|piece| second_moment(&polytope.intersect(piece)?))
        .collect()
}

/// `∫_P xxᵀ dx`; zero when `P` is not full-dimensional.
pub fn second_moment(p: &HPolyhedron) -> Result<SymmetricMatrix> {
    let n = p.ambient_dim();
    let mut total = SymmetricMatrix::zeros(n);
    if p.dim() < n as isize {
        return Ok(total);
    }
    let (points, simplices) = triangulate(p)?;
    for s in &simplices {
        let verts: Vec<&DVector<f64>> = s.iter().map(|&k| &points[k]).collect();
        total = total.add(&simplex_second_moment(&verts));
    }
    Ok(total)
}

/// `∫ xxᵀ` over the simplex with vertices `v₀ … vₙ`:
/// `vol / ((n+1)(n+2)) · (Σ vₖvₖᵀ + (Σ vₖ)(Σ vₖ)ᵀ)`.
pub fn simplex_second_moment(v: &[&DVector<f64>]) -> SymmetricMatrix {
    let n = v[0].len();
    let edges = DMatrix::from_fn(n, n, |r, c| v[c + 1][r] - v[0][r]);
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let vol = edges.determinant().abs() / fact;
    let sum = v.iter().fold(DVector::zeros(n), |acc, x| acc + *x);
    let mut m = SymmetricMatrix::outer(&sum);
    for x in v {
        m = m.add(&SymmetricMatrix::outer(x));
    }
    m.scale(vol / ((n + 1) * (n + 2)) as f64)
}

/// Fan triangulation of a bounded full-dimensional polytope, recursing over
/// faces and coning each from its vertex centroid. Returns the point list
/// (vertices first, then centroids) and simplices as index lists.
pub fn triangulate(p: &HPolyhedron) -> Result<(Vec<DVector<f64>>, Vec<Vec<usize>>)> {
    let mut points = p.vertices()?;
    let n = p.ambient_dim();
    let all: Vec<usize> = (0..points.len()).collect();
    let simplices = fan(&mut points, p.rows(), &all, n);
    Ok((points, simplices))
}

fn affine_dim(points: &[DVector<f64>], idx: &[usize]) -> usize {
    if idx.is_empty() {
        return 0;
    }
    let base = &points[idx[0]];
    let diffs: Vec<DVector<f64>> = idx[1..].iter().map(|&k| &points[k] - base).collect();
    rank(&diffs, 1e-9)
}

fn fan(
    points: &mut Vec<DVector<f64>>,
    rows: &[(DVector<f64>, f64)],
    face: &[usize],
    k: usize,
) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![face[0]]];
    }
    if face.len() == k + 1 {
        return vec![face.to_vec()];
    }
    let centroid = face
        .iter()
        .fold(DVector::zeros(points[0].len()), |acc, &i| acc + &points[i])
        / face.len() as f64;
    points.push(centroid);
    let apex = points.len() - 1;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut out = Vec::new();
    for (a, b) in rows {
        let tol = VERTEX_TOL * (1.0 + b.abs());
        let sub: Vec<usize> = face
            .iter()
            .copied()
            .filter(|&i| (a.dot(&points[i]) - b).abs() <= tol)
            .collect();
        if sub.len() < k || sub.len() == face.len() || seen.contains(&sub) {
            continue;
        }
        if affine_dim(points, &sub) + 1 != k {
            continue;
        }
        seen.insert(sub.clone());
        for mut s in fan(points, rows, &sub, k - 1) {
            s.push(apex);
            out.push(s);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisOptions {
    /// Sample count for the invariance check of the extracted set.
    pub check_samples: usize,
    /// A solution whose support function drops below this fraction of the
    /// inradius of `X` in some direction has no interior and is rejected.
    pub degeneracy_tol: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            check_samples: 1000,
            degeneracy_tol: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
}

#[derive(Clone, Debug)]
pub struct SynthesisResult {
    /// Gauge of `S°`, i.e. the support function of `S`, on the problem's partition.
    pub polar_side: PiecewiseSemiEllipsoid,
    pub set: PiecewiseSemiEllipsoid,
    pub objective: f64,
    pub report: InvarianceReport,
    pub violations: Vec<Violation>,
    pub stats: SolverStats,
}

pub fn solve(prob: &SynthesisProblem, backend: &dyn ConicSolver) -> Result<SynthesisResult> {
    solve_with(prob, backend, &SynthesisOptions::default())
}

/// Solves the program and extracts `S`.
///
/// The program is always feasible at `Q = 0` (the set `{0}`); an optimum
/// whose set has empty interior is reported as [`Error::Infeasible`].
pub fn solve_with(
    prob: &SynthesisProblem,
    backend: &dyn ConicSolver,
    opts: &SynthesisOptions,
) -> Result<SynthesisResult> {
    let asm = assemble_detailed(prob)?;
    let sol = backend.solve(&asm.program);
    let extract = || -> Result<PiecewiseSemiEllipsoid> {
        let q: Vec<SymmetricMatrix> = asm.q.iter().map(|v| clip_psd(&sol.matrix(v))).collect();
        PiecewiseSemiEllipsoid::new(prob.partition.clone(), q)
    };
    let polar_side = match sol.status {
        SolveStatus::Optimal => extract()?,
        SolveStatus::Infeasible => return Err(Error::Infeasible),
        SolveStatus::Unbounded => return Err(Error::Unbounded),
        SolveStatus::NumericalFailure => {
            // Programs whose only solutions have no interior lack a strictly
            // feasible point and stall near the degenerate optimum.
            let stalled_at_degenerate = sol.relative_gap <= 1e-6
                && constraint_violation(&asm.program, &sol.x) <= STALL_TOL
                && is_degenerate(&extract()?, &prob.system.x, opts.degeneracy_tol)?;
            if stalled_at_degenerate {
                return Err(Error::Infeasible);
            }
            return Err(Error::NumericalFailure(format!(
                "solver stopped after {} iterations (primal {:.2e}, dual {:.2e}, gap {:.2e})",
                sol.iterations, sol.primal_residual, sol.dual_residual, sol.relative_gap
            )));
        }
    };
    if is_degenerate(&polar_side, &prob.system.x, opts.degeneracy_tol)? {
        return Err(Error::Infeasible);
    }
    let set = polar_side.polar()?;
    let report = check_switched_invariance(&prob.system, &set, opts.check_samples)?;
    let violations = set.validate();
    Ok(SynthesisResult {
        polar_side,
        set,
        objective: sol.objective,
        report,
        violations,
        stats: SolverStats {
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            relative_gap: sol.relative_gap,
        },
    })
}

fn clip_psd(m: &SymmetricMatrix) -> SymmetricMatrix {
    let (vals, vecs) = eig_sym(m);
    if vals.iter().all(|&v| v >= 0.0) {
        return m.clone();
    }
    let n = m.dim();
    SymmetricMatrix::from_fn(n, |k, l| {
        (0..n)
            .map(|t| vals[t].max(0.0) * vecs[(k, t)] * vecs[(l, t)])
            .sum()
    })
}

fn is_degenerate(polar_side: &PiecewiseSemiEllipsoid, x: &HPolyhedron, tol: f64) -> Result<bool> {
    let n = polar_side.dim();
    let inradius = x
        .rows()
        .iter()
        .map(|(a, b)| b / a.norm())
        .fold(f64::INFINITY, f64::min);
    let mut dirs = sampling::directions(n, 720, 0x5EED);
    for i in 0..polar_side.partition().len() {
        dirs.extend(polar_side.partition().rays(i).iter().cloned());
    }
    for d in &dirs {
        let h = polar_side.gauge(&(d / d.norm()))?;
        if h.value() <= tol * inradius {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::InteriorPointSolver;
    use crate::fixtures;
    use crate::polyhedra::{build_partition, quadrants};
    use crate::systems::LinearControlSystem;

    fn unit_square() -> HPolyhedron {
        HPolyhedron::from_matrix(
            &DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            &[1.0, 0.0, 1.0, 0.0],
        )
        .unwrap()
    }

    fn trace(m: &SymmetricMatrix) -> f64 {
        (0..m.dim()).map(|k| m.get(k, k)).sum()
    }

    #[test]
    fn moments_of_boxes() {
        assert!((trace(&second_moment(&unit_square()).unwrap()) - 2.0 / 3.0).abs() < 1e-12);
        let whole = build_partition(vec![HPolyhedron::universe(2)]).unwrap();
        let m = second_moments(&HPolyhedron::hypercube(2, 1.0), &whole).unwrap();
        assert!((trace(&m[0]) - 8.0 / 3.0).abs() < 1e-12);
        let quads = build_partition(quadrants(2)).unwrap();
        let m = second_moments(&HPolyhedron::hypercube(2, 1.0), &quads).unwrap();
        let total: f64 = m.iter().map(trace).sum();
        assert!((total - 8.0 / 3.0).abs() < 1e-12);
        // Off-diagonal ∫x₁x₂ over the first quadrant part of the box is 1/4.
        assert!((m[0].get(0, 1) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn flat_polytope_has_zero_moment() {
        let seg = HPolyhedron::from_matrix(
            &DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]),
            &[1.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(second_moment(&seg).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn cube_in_three_dimensions() {
        let m = second_moment(&HPolyhedron::hypercube(3, 1.0)).unwrap();
        // ∫x₁² over [−1,1]³ = 8/3.
        assert!((m.get(0, 0) - 8.0 / 3.0).abs() < 1e-10);
        assert!(m.get(0, 1).abs() < 1e-10);
    }

    #[test]
    fn program_shape_for_quadrants() {
        let prob = SynthesisProblem::new(
            fixtures::double_integrator(),
            build_partition(quadrants(2)).unwrap(),
        )
        .unwrap();
        let asm = assemble_detailed(&prob).unwrap();
        assert_eq!(asm.q.len(), 4);
        assert_eq!(asm.u.len(), 4);
        assert!(asm.invariance.len() <= 16 && !asm.invariance.is_empty());
        // Four polar vertices, each on the boundary of two quadrants.
        assert_eq!(asm.state_constraints, 8);
        asm.program.validate().unwrap();
    }

    #[test]
    fn single_mode_switched_is_the_same_program() {
        let sys = fixtures::double_integrator();
        let part = build_partition(quadrants(2)).unwrap();
        let a = SynthesisProblem::new(sys.clone(), part.clone()).unwrap();
        let b = SynthesisProblem::new(SwitchedControlSystem::from(sys), part).unwrap();
        assert_eq!(assemble(&a).unwrap(), assemble_switched(&b).unwrap());
    }

    #[test]
    fn contraction_admits_the_disk() {
        let sys = LinearControlSystem::autonomous(
            DMatrix::identity(2, 2) * 0.5,
            HPolyhedron::hypercube(2, 1.0),
        )
        .unwrap();
        let prob = SynthesisProblem::new(sys, build_partition(quadrants(2)).unwrap()).unwrap();
        let asm = assemble_detailed(&prob).unwrap();
        let mut x = vec![0.0; asm.program.num_vars()];
        for mv in &asm.q {
            for k in 0..2 {
                x[mv.entry(k, k)] = 1.0;
            }
        }
        // λ's and u's stay at zero; only the PSD witnesses need to hold.
        for blk in &asm.program.psd_blocks {
            assert!(crate::linalg::is_psd(&blk.eval(&x), 1e-12));
        }
        for e in &asm.program.inequalities {
            assert!(e.eval(&x) >= -1e-12);
        }
        for e in &asm.program.equalities {
            assert!(e.eval(&x).abs() < 1e-12);
        }
    }

    #[test]
    fn expansion_is_infeasible() {
        let sys = LinearControlSystem::autonomous(
            DMatrix::identity(2, 2) * 2.0,
            HPolyhedron::hypercube(2, 1.0),
        )
        .unwrap();
        let prob = SynthesisProblem::new(sys, build_partition(quadrants(2)).unwrap()).unwrap();
        let r = solve(&prob, &InteriorPointSolver::default());
        assert!(
            matches!(r, Err(Error::Infeasible)),
            "{:?}",
            r.map(|s| s.objective)
        );
    }

    #[test]
    fn double_integrator_on_quadrants() {
        let prob = SynthesisProblem::new(
            fixtures::double_integrator(),
            build_partition(quadrants(2)).unwrap(),
        )
        .unwrap();
        let res = solve(&prob, &InteriorPointSolver::default()).unwrap();
        assert!(res.violations.is_empty(), "{:?}", res.violations);
        assert!(res.report.passed(), "{:?}", res.report);
        assert!(res.objective > 0.0);
    }
}
