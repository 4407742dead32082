//! Solver-agnostic conic programs.
//!
//! A [`ConicProgram`] holds scalar variables (free or nonnegative), PSD
//! matrix variables, affine equalities and inequalities, affine PSD blocks
//! and a linear objective to maximize. Backends implement [`ConicSolver`].
//!
//! The JSON form (see [`ConicProgram::to_json`]) lists variables by kind,
//! expressions as `{"constant": c, "terms": [[var, coeff], ...]}` and PSD
//! blocks as packed upper triangles (row-major, `dim (dim + 1) / 2` entries).

mod ipm;

pub use ipm::{InteriorPointSolver, IpmSettings};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

pub type VarId = usize;

pub const PROGRAM_SCHEMA: &str = "invkit/1";

/// Affine expression `constant + Σ coeff · var`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: vec![],
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: VarId, coeff: f64) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(v, coeff)],
        }
    }

    pub fn add_term(&mut self, v: VarId, coeff: f64) {
        if coeff != 0.0 {
            self.terms.push((v, coeff));
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, t: f64) {
        self.constant += t * other.constant;
        for &(v, c) in &other.terms {
            self.add_term(v, t * c);
        }
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        self.add_scaled(other, 1.0);
        self
    }

    pub fn minus(mut self, other: &LinExpr) -> Self {
        self.add_scaled(other, -1.0);
        self
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut e = LinExpr::default();
        e.add_scaled(self, t);
        e
    }

    /// Merges repeated variables and drops zero coefficients.
    pub fn compact(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }

    fn max_var(&self) -> Option<VarId> {
        self.terms.iter().map(|t| t.0).max()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Free,
    Nonneg,
}

/// A PSD matrix variable whose packed upper-triangle entries are scalar variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixVar {
    pub dim: usize,
    pub entries: Vec<VarId>,
}

impl MatrixVar {
    pub fn entry(&self, i: usize, j: usize) -> VarId {
        self.entries[packed(self.dim, i, j)]
    }

    pub fn expr(&self) -> SymExpr {
        SymExpr {
            dim: self.dim,
            entries: self.entries.iter().map(|&v| LinExpr::var(v)).collect(),
        }
    }
}

#[inline]
pub(crate) fn packed(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Symmetric matrix whose entries are affine expressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymExpr {
    pub dim: usize,
    pub entries: Vec<LinExpr>,
}

impl SymExpr {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![LinExpr::default(); dim * (dim + 1) / 2],
        }
    }

    pub fn from_constant(m: &SymmetricMatrix) -> Self {
        let mut e = Self::zeros(m.dim());
        for i in 0..m.dim() {
            for j in i..m.dim() {
                e.entries[packed(m.dim(), i, j)].constant = m.get(i, j);
            }
        }
        e
    }

    pub fn get(&self, i: usize, j: usize) -> &LinExpr {
        &self.entries[packed(self.dim, i, j)]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut LinExpr {
        &mut self.entries[packed(self.dim, i, j)]
    }

    pub fn add_scaled(&mut self, other: &SymExpr, t: f64) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.add_scaled(b, t);
        }
    }

    /// Adds `t · M` for a constant symmetric `M`.
    pub fn add_constant(&mut self, m: &SymmetricMatrix, t: f64) {
        assert_eq!(self.dim, m.dim());
        for i in 0..self.dim {
            for j in i..self.dim {
                self.get_mut(i, j).constant += t * m.get(i, j);
            }
        }
    }

    /// `T X Tᵀ` for a constant `T` of size `r × dim`.
    pub fn congruence(&self, t: &DMatrix<f64>) -> SymExpr {
        assert_eq!(t.ncols(), self.dim);
        let r = t.nrows();
        let mut out = SymExpr::zeros(r);
        for a in 0..r {
            for b in a..r {
                let e = out.get_mut(a, b);
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        let w = t[(a, i)] * t[(b, j)];
                        if w != 0.0 {
                            e.add_scaled(self.get(i, j), w);
                        }
                    }
                }
                e.compact();
            }
        }
        out
    }

    /// `uᵀ X v`.
    pub fn bilinear(&self, u: &DVector<f64>, v: &DVector<f64>) -> LinExpr {
        let mut e = LinExpr::default();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let w = u[i] * v[j];
                if w != 0.0 {
                    e.add_scaled(self.get(i, j), w);
                }
            }
        }
        e.compact();
        e
    }

    pub fn quad(&self, v: &DVector<f64>) -> LinExpr {
        self.bilinear(v, v)
    }

    /// `X v` as a vector of expressions.
    pub fn mul_vec(&self, v: &DVector<f64>) -> Vec<LinExpr> {
        (0..self.dim)
            .map(|i| {
                let mut e = LinExpr::default();
                for j in 0..self.dim {
                    if v[j] != 0.0 {
                        e.add_scaled(self.get(i, j), v[j]);
                    }
                }
                e.compact();
                e
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(self.dim, |i, j| self.get(i, j).eval(x))
    }
}

/// Semidefinite program in maximization form.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub variables: Vec<VarKind>,
    pub matrix_vars: Vec<MatrixVar>,
    /// Each expression must equal zero.
    pub equalities: Vec<LinExpr>,
    /// Each expression must be nonnegative.
    pub inequalities: Vec<LinExpr>,
    /// Each block must be positive semidefinite.
    pub psd_blocks: Vec<SymExpr>,
    /// Maximized.
    pub objective: LinExpr,
}

#[derive(Serialize, Deserialize)]
struct ProgramFile {
    schema: String,
    #[serde(flatten)]
    program: ConicProgram,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, kind: VarKind) -> VarId {
        self.variables.push(kind);
        self.variables.len() - 1
    }

    pub fn add_vars(&mut self, kind: VarKind, count: usize) -> Vec<VarId> {
        (0..count).map(|_| self.add_var(kind)).collect()
    }

    pub fn add_psd_matrix(&mut self, dim: usize) -> MatrixVar {
        let entries = self.add_vars(VarKind::Free, dim * (dim + 1) / 2);
        let mv = MatrixVar { dim, entries };
        self.matrix_vars.push(mv.clone());
        mv
    }

    pub fn add_equality(&mut self, mut e: LinExpr) {
        e.compact();
        self.equalities.push(e);
    }

    pub fn add_inequality(&mut self, mut e: LinExpr) {
        e.compact();
        self.inequalities.push(e);
    }

    pub fn add_psd_block(&mut self, mut block: SymExpr) {
        for e in &mut block.entries {
            e.compact();
        }
        self.psd_blocks.push(block);
    }

    pub fn set_objective(&mut self, mut e: LinExpr) {
        e.compact();
        self.objective = e;
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Checks that every referenced variable exists and block sizes are consistent.
    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        let check = |e: &LinExpr| match e.max_var() {
            Some(v) if v >= n => Err(Error::InvalidInput(format!(
                "expression references undeclared variable {v}"
            ))),
            _ => Ok(()),
        };
        for mv in &self.matrix_vars {
            if mv.entries.len() != mv.dim * (mv.dim + 1) / 2 || mv.entries.iter().any(|&v| v >= n) {
                return Err(Error::InvalidInput("malformed matrix variable".into()));
            }
        }
        for b in &self.psd_blocks {
            if b.entries.len() != b.dim * (b.dim + 1) / 2 {
                return Err(Error::InvalidInput("malformed PSD block".into()));
            }
            b.entries.iter().try_for_each(check)?;
        }
        self.equalities.iter().try_for_each(check)?;
        self.inequalities.iter().try_for_each(check)?;
        check(&self.objective)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ProgramFile {
            schema: PROGRAM_SCHEMA.into(),
            program: self.clone(),
        })
        .expect("program serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ProgramFile =
            serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        if f.schema != PROGRAM_SCHEMA {
            return Err(Error::InvalidInput(format!("unknown schema {}", f.schema)));
        }
        f.program.validate()?;
        Ok(f.program)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Backend output. `x` holds one value per scalar variable.
#[derive(Clone, Debug)]
pub struct Solution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

impl Solution {
    pub fn value(&self, v: VarId) -> f64 {
        self.x[v]
    }

    pub fn eval(&self, e: &LinExpr) -> f64 {
        e.eval(&self.x)
    }

    pub fn matrix(&self, mv: &MatrixVar) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(mv.dim, |i, j| self.x[mv.entry(i, j)])
    }

    pub fn into_result(self) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(Error::Infeasible),
            SolveStatus::Unbounded => Err(Error::Unbounded),
            SolveStatus::NumericalFailure => Err(Error::NumericalFailure(format!(
                "solver stopped after {} iterations (primal residual {:e}, gap {:e})",
                self.iterations, self.primal_residual, self.relative_gap
            ))),
        }
    }
}

/// Contract for conic backends: on a feasible program return values with
/// primal residual below 1e-7 and relative gap below 1e-6, and distinguish
/// infeasible, unbounded and numerically failed runs.
pub trait ConicSolver: Sync {
    fn solve(&self, program: &ConicProgram) -> Solution;
}

/// Maximum violation of the program's constraints at `x`.
///
/// PSD blocks contribute the negative part of their minimum eigenvalue.
pub fn constraint_violation(program: &ConicProgram, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for e in &program.equalities {
        worst = worst.max(e.eval(x).abs());
    }
    for e in &program.inequalities {
        worst = worst.max(-e.eval(x));
    }
    for (v, kind) in program.variables.iter().enumerate() {
        if *kind == VarKind::Nonneg {
            worst = worst.max(-x[v]);
        }
    }
    for mv in &program.matrix_vars {
        let m = SymmetricMatrix::from_fn(mv.dim, |i, j| x[mv.entry(i, j)]);
        worst = worst.max(-crate::linalg::min_eigenvalue(&m));
    }
    for b in &program.psd_blocks {
        worst = worst.max(-crate::linalg::min_eigenvalue(&b.eval(x)));
    }
    worst
}
