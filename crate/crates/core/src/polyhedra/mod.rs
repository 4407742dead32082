//! Polyhedra in H- and V-representation.
//!
//! Inequalities are stored as `aᵀx ≤ b` with unit normals; cones have all
//! `b = 0`. Representation conversion runs the double description method on
//! the homogenization `{(x, t) : aᵀx − b t ≤ 0, t ≥ 0}`.

mod dd;
pub mod lp;
mod partition;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{rank, unit};
pub use lp::LpOutcome;
pub use partition::{
    build_partition, build_partition_partial, facet_cones, facet_cones_indexed, orthants,
    quadrants, ConicPartition, Neighbor, MEMBERSHIP_TOL,
};

/// Rows whose normals differ by less than this (after normalization) are merged.
pub const DUPLICATE_TOL: f64 = 1e-9;
/// Fourier-Motzkin aborts when an elimination step would produce more rows.
pub const FM_BUDGET: usize = 100_000;
/// Slack accepted by LP-based redundancy and containment tests.
pub const LP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct HPolyhedron {
    n: usize,
    rows: Vec<(DVector<f64>, f64)>,
}

impl HPolyhedron {
    /// Builds `{x : aᵀx ≤ b}` after normalizing and merging rows.
    ///
    /// Rows with a vanishing normal are dropped when trivially satisfied; an
    /// unsatisfiable one is replaced by the infeasible pair `±x₁ ≤ −1`.
    pub fn new(n: usize, rows: Vec<(DVector<f64>, f64)>) -> Result<Self> {
        let mut out: Vec<(DVector<f64>, f64)> = Vec::with_capacity(rows.len());
        let mut infeasible = false;
        for (a, b) in rows {
            if a.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} in ambient dimension {n}",
                    a.len()
                )));
            }
            if !b.is_finite() || a.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("non-finite inequality".into()));
            }
            let norm = a.norm();
            if norm <= 1e-12 {
                if b < -1e-12 {
                    infeasible = true;
                }
                continue;
            }
            let a = a / norm;
            let b = b / norm;
            match out
                .iter_mut()
                .find(|(o, _)| (o - &a).amax() < DUPLICATE_TOL)
            {
                Some(row) => row.1 = row.1.min(b),
                None => out.push((a, b)),
            }
        }
        if infeasible && n > 0 {
            out.push((unit(n, 0), -1.0));
            out.push((-unit(n, 0), -1.0));
        }
        Ok(Self { n, rows: out })
    }

    pub fn from_matrix(a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} offsets",
                a.nrows(),
                b.len()
            )));
        }
        let rows = (0..a.nrows())
            .map(|i| (a.row(i).transpose(), b[i]))
            .collect();
        Self::new(a.ncols(), rows)
    }

    /// Cone `{x : aᵀx ≤ 0}` for the given normals.
    pub fn cone(n: usize, normals: Vec<DVector<f64>>) -> Result<Self> {
        Self::new(n, normals.into_iter().map(|a| (a, 0.0)).collect())
    }

    /// The whole space.
    pub fn universe(n: usize) -> Self {
        Self {
            n,
            rows: Vec::new(),
        }
    }

    /// The box `[-r, r]ⁿ`.
    pub fn hypercube(n: usize, r: f64) -> Self {
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            rows.push((unit(n, i), r));
            rows.push((-unit(n, i), r));
        }
        Self { n, rows }
    }

    /// The cross-polytope `{‖x‖₁ ≤ r}`.
    pub fn cross_polytope(n: usize, r: f64) -> Result<Self> {
        let mut vertices = Vec::new();
        for i in 0..n {
            vertices.push(unit(n, i) * r);
            vertices.push(-unit(n, i) * r);
        }
        VPolyhedron::new(n, vertices, Vec::new())?.to_hrep()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[(DVector<f64>, f64)] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_cone(&self) -> bool {
        self.rows.iter().all(|(_, b)| *b == 0.0)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.rows.iter().all(|(a, b)| a.dot(x) <= b + tol)
    }

    /// Largest violation `max(aᵀx − b)`, or `−∞` without rows.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        self.rows
            .iter()
            .map(|(a, b)| a.dot(x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn intersect(&self, other: &HPolyhedron) -> Result<HPolyhedron> {
        self.check_dim(other.n)?;
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Self::new(self.n, rows)
    }

    /// Scales the set by `t > 0`.
    pub fn scaled(&self, t: f64) -> HPolyhedron {
        Self {
            n: self.n,
            rows: self.rows.iter().map(|(a, b)| (a.clone(), b * t)).collect(),
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch(format!(
                "expected dimension {}, got {n}",
                self.n
            )));
        }
        Ok(())
    }

    /// `{x : M x ∈ P}`; each row `(a, b)` becomes `(Mᵀa, b)`.
    pub fn preimage(&self, m: &DMatrix<f64>) -> Result<HPolyhedron> {
        self.check_dim(m.nrows())?;
        let mt = m.transpose();
        let rows = self.rows.iter().map(|(a, b)| (&mt * a, *b)).collect();
        Self::new(m.ncols(), rows)
    }

    /// Projection onto the first `n − 1` coordinates by Fourier-Motzkin,
    /// followed by redundancy removal.
    pub fn eliminate_last(&self) -> Result<HPolyhedron> {
        if self.n < 2 {
            return Err(Error::InvalidInput(
                "cannot eliminate the only coordinate".into(),
            ));
        }
        let k = self.n - 1;
        let (mut pos, mut neg, mut zero) = (Vec::new(), Vec::new(), Vec::new());
        for (a, b) in &self.rows {
            let c = a[k];
            if c > 1e-12 {
                pos.push((a / c, b / c));
            } else if c < -1e-12 {
                neg.push((a / -c, b / -c));
            } else {
                zero.push((a.rows(0, k).into_owned(), *b));
            }
        }
        if pos.len() * neg.len() + zero.len() > FM_BUDGET {
            return Err(Error::ComplexityBudgetExceeded { budget: FM_BUDGET });
        }
        let mut rows = zero;
        for (ap, bp) in &pos {
            for (an, bn) in &neg {
                let a = (ap + an).rows(0, k).into_owned();
                rows.push((a, bp + bn));
            }
        }
        Self::new(k, rows)?.remove_redundancy()
    }

    /// Drops every row whose removal leaves the set unchanged.
    pub fn remove_redundancy(&self) -> Result<HPolyhedron> {
        if self.is_empty()? {
            return Err(Error::EmptyPolyhedron);
        }
        let mut rows = self.rows.clone();
        let mut i = 0;
        while i < rows.len() {
            let (a, b) = rows[i].clone();
            let mut others: Vec<(DVector<f64>, f64)> = rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, r)| r.clone())
                .collect();
            others.push((a.clone(), b + 1.0));
            let redundant = match lp::maximize(self.n, &a, &others)? {
                LpOutcome::Optimal { value, .. } => value <= b + LP_TOL * b.abs().max(1.0),
                LpOutcome::Unbounded => false,
                LpOutcome::Infeasible => return Err(Error::EmptyPolyhedron),
            };
            if redundant {
                rows.remove(i);
            } else {
                i += 1;
            }
        }
        Ok(Self { n: self.n, rows })
    }

    /// Emptiness by LP feasibility.
    pub fn is_empty(&self) -> Result<bool> {
        if self.rows.is_empty() {
            return Ok(false);
        }
        let c = DVector::zeros(self.n);
        Ok(matches!(
            lp::maximize(self.n, &c, &self.rows)?,
            LpOutcome::Infeasible
        ))
    }

    /// `max_{x ∈ P} yᵀx` by LP; `+∞` when unbounded, `−∞` when empty.
    pub fn support_lp(&self, y: &DVector<f64>) -> Result<f64> {
        Ok(match lp::maximize(self.n, y, &self.rows)? {
            LpOutcome::Optimal { value, .. } => value,
            LpOutcome::Unbounded => f64::INFINITY,
            LpOutcome::Infeasible => f64::NEG_INFINITY,
        })
    }

    /// `self ⊆ other`, tested row by row of `other` with an LP over `self`.
    pub fn is_subset_of(&self, other: &HPolyhedron, tol: f64) -> Result<bool> {
        self.check_dim(other.n)?;
        for (a, b) in &other.rows {
            if self.support_lp(a)? > b + tol * b.abs().max(1.0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Generators of the homogenized cone.
    fn homogeneous_generators(&self) -> dd::ConeGenerators {
        let n = self.n;
        let mut rows: Vec<DVector<f64>> = self
            .rows
            .iter()
            .map(|(a, b)| {
                let mut r = DVector::zeros(n + 1);
                r.rows_mut(0, n).copy_from(a);
                r[n] = -b;
                r
            })
            .collect();
        rows.push(-unit(n + 1, n));
        dd::cone_generators(n + 1, &rows)
    }

    /// Vertices and rays; a line appears as a pair of opposite rays.
    pub fn to_vrep(&self) -> Result<VPolyhedron> {
        let n = self.n;
        let g = self.homogeneous_generators();
        let mut vertices = Vec::new();
        let mut rays = Vec::new();
        for l in &g.lines {
            let d = l.rows(0, n).into_owned();
            rays.push(d.clone());
            rays.push(-d);
        }
        for r in &g.rays {
            let t = r[n];
            let x = r.rows(0, n).into_owned();
            if t > 1e-10 {
                vertices.push(x / t);
            } else if let Some(u) = normalized(x) {
                rays.push(u);
            }
        }
        if vertices.is_empty() {
            return Err(Error::EmptyPolyhedron);
        }
        Ok(VPolyhedron { n, vertices, rays })
    }

    /// Vertices of a bounded polyhedron.
    pub fn vertices(&self) -> Result<Vec<DVector<f64>>> {
        let v = self.to_vrep()?;
        if !v.rays.is_empty() {
            return Err(Error::UnboundedNonCone);
        }
        Ok(v.vertices)
    }

    /// Dimension of the affine hull, `−1` when empty.
    pub fn dim(&self) -> isize {
        match self.to_vrep() {
            Ok(v) => v.dim() as isize,
            Err(_) => -1,
        }
    }

    pub fn is_bounded(&self) -> Result<bool> {
        Ok(self.to_vrep()?.rays.is_empty())
    }

    /// Rows that define facets, detected from vertex incidence.
    pub fn facets(&self) -> Result<HPolyhedron> {
        let v = self.to_vrep()?;
        let d = v.dim();
        let mut rows = Vec::new();
        for (a, b) in &self.rows {
            let on: Vec<DVector<f64>> = v
                .vertices
                .iter()
                .filter(|x| (a.dot(x) - b).abs() <= 1e-8 * b.abs().max(1.0))
                .cloned()
                .collect();
            let Some(base) = on.first() else {
                continue;
            };
            let mut dirs: Vec<DVector<f64>> = on.iter().skip(1).map(|x| x - base).collect();
            dirs.extend(v.rays.iter().filter(|r| a.dot(r).abs() <= 1e-8).cloned());
            if rank(&dirs, 1e-9) + 1 == d {
                // An implicit equality holds on the whole set and is not a facet.
                let all_on = v.vertices.iter().all(|x| (a.dot(x) - b).abs() <= 1e-8)
                    && v.rays.iter().all(|r| a.dot(r).abs() <= 1e-8);
                if !all_on {
                    rows.push((a.clone(), *b));
                }
            }
        }
        Self::new(self.n, rows)
    }

    /// Polar set `{y : yᵀx ≤ 1 ∀x ∈ P}`; for a cone, `{y : yᵀx ≤ 0 ∀x ∈ P}`.
    pub fn polar_polytope(&self) -> Result<HPolyhedron> {
        let n = self.n;
        if self.is_cone() {
            let rays = self.rows.iter().map(|(a, _)| a.clone()).collect();
            return VPolyhedron::new(n, vec![DVector::zeros(n)], rays)?.to_hrep();
        }
        if self.rows.iter().any(|(_, b)| *b < -1e-12) {
            return Err(Error::OriginNotContained);
        }
        let mut vertices = vec![DVector::zeros(n)];
        let mut rays = Vec::new();
        for (a, b) in &self.rows {
            if *b > 1e-12 {
                vertices.push(a / *b);
            } else {
                rays.push(a.clone());
            }
        }
        VPolyhedron::new(n, vertices, rays)?.to_hrep()
    }
}

fn normalized(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    (n > 1e-12).then(|| v / n)
}

/// `conv(vertices) + cone(rays)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VPolyhedron {
    pub n: usize,
    pub vertices: Vec<DVector<f64>>,
    pub rays: Vec<DVector<f64>>,
}

impl VPolyhedron {
    pub fn new(n: usize, vertices: Vec<DVector<f64>>, rays: Vec<DVector<f64>>) -> Result<Self> {
        if vertices.iter().chain(rays.iter()).any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "generator outside dimension {n}"
            )));
        }
        if vertices.is_empty() {
            return Err(Error::EmptyPolyhedron);
        }
        Ok(Self { n, vertices, rays })
    }

    /// A cone given by its generators.
    pub fn cone(n: usize, rays: Vec<DVector<f64>>) -> Result<Self> {
        Self::new(n, vec![DVector::zeros(n)], rays)
    }

    pub fn dim(&self) -> usize {
        let base = &self.vertices[0];
        let mut dirs: Vec<DVector<f64>> = self.vertices.iter().skip(1).map(|v| v - base).collect();
        dirs.extend(self.rays.iter().cloned());
        rank(&dirs, 1e-9)
    }

    /// `max yᵀx`, `+∞` along an unbounded ray.
    pub fn support(&self, y: &DVector<f64>) -> f64 {
        if self.rays.iter().any(|r| y.dot(r) > 1e-12) {
            return f64::INFINITY;
        }
        self.vertices
            .iter()
            .map(|v| y.dot(v))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimal H-representation, by double description on the dual cone.
    pub fn to_hrep(&self) -> Result<HPolyhedron> {
        let n = self.n;
        let mut gens: Vec<DVector<f64>> = Vec::new();
        for v in &self.vertices {
            let mut g = DVector::zeros(n + 1);
            g.rows_mut(0, n).copy_from(v);
            g[n] = 1.0;
            gens.push(g);
        }
        for r in &self.rays {
            let mut g = DVector::zeros(n + 1);
            g.rows_mut(0, n).copy_from(r);
            gens.push(g);
        }
        // (a, c) with aᵀv + c ≤ 0 on every generator encodes aᵀx ≤ −c.
        let dual = dd::cone_generators(n + 1, &gens);
        let mut rows = Vec::new();
        let mut push = |w: &DVector<f64>| {
            let a = w.rows(0, n).into_owned();
            if a.norm() > 1e-10 {
                rows.push((a, -w[n]));
            }
        };
        for l in &dual.lines {
            push(l);
            push(&-l);
        }
        for r in &dual.rays {
            push(r);
        }
        let mut h = HPolyhedron::new(n, rows)?;
        for row in h.rows.iter_mut() {
            if row.1.abs() < 1e-12 {
                row.1 = 0.0;
            }
        }
        Ok(h)
    }
}
