//! Piecewise semi-ellipsoids: convex sets whose gauge is `√(xᵀQᵢx)` on the
//! i-th cone of a conic partition, and their closed-form polars.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{is_psd, min_eigenvalue, pseudoinverse, rank, Subspace, SymmetricMatrix};
use crate::polyhedra::{
    build_partition, build_partition_partial, facet_cones_indexed, ConicPartition, HPolyhedron,
    VPolyhedron, MEMBERSHIP_TOL,
};

/// Points farther than this (relative) from every piece are outside the partition.
pub const FALLBACK_TOL: f64 = 1e-7;
/// Agreement required between the face restrictions `E Qᵢ Eᵀ` of adjacent pieces.
pub const FACE_TOL: f64 = 1e-7;
/// Tolerance of the continuity and convexity checks in [`PiecewiseSemiEllipsoid::validate`].
pub const VALIDATE_TOL: f64 = 1e-8;
/// Image rays closer than this in direction are identified.
const SNAP_TOL: f64 = 1e-8;

/// A nonnegative real or `+∞`; `∞ = ∞` and `∞ ≤ ∞` hold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub fn value(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::Infinity => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// `self ≤ other + tol`, with `∞ ≤ ∞`.
    pub fn le_tol(self, other: ExtendedReal, tol: f64) -> bool {
        match (self, other) {
            (_, ExtendedReal::Infinity) => true,
            (ExtendedReal::Infinity, ExtendedReal::Finite(_)) => false,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a <= b + tol,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            ExtendedReal::Finite(v)
        } else {
            ExtendedReal::Infinity
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NotPsd,
    Continuity,
    Convexity,
}

/// One failed condition; `i == j` for per-piece conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub i: usize,
    pub j: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct PiecewiseSemiEllipsoid {
    partition: ConicPartition,
    q: Vec<SymmetricMatrix>,
    polar_cache: OnceLock<std::result::Result<Box<PiecewiseSemiEllipsoid>, Error>>,
}

impl PartialEq for PiecewiseSemiEllipsoid {
    fn eq(&self, other: &Self) -> bool {
        self.partition == other.partition && self.q == other.q
    }
}

impl PiecewiseSemiEllipsoid {
    /// Pairs a partition with one PSD matrix per piece.
    pub fn new(partition: ConicPartition, q: Vec<SymmetricMatrix>) -> Result<Self> {
        if q.len() != partition.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} pieces but {} matrices",
                partition.len(),
                q.len()
            )));
        }
        for m in &q {
            if m.dim() != partition.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "matrix of size {} in dimension {}",
                    m.dim(),
                    partition.dim()
                )));
            }
            if !is_psd(m, 1e-9) {
                return Err(Error::NotPsd(min_eigenvalue(m)));
            }
        }
        Ok(Self {
            partition,
            q,
            polar_cache: OnceLock::new(),
        })
    }

    /// The ellipsoid `{xᵀQx ≤ 1}` as a single piece.
    pub fn from_ellipsoid(q: SymmetricMatrix) -> Result<Self> {
        let n = q.dim();
        Self::new(build_partition(vec![HPolyhedron::universe(n)])?, vec![q])
    }

    /// A polytope with the origin in its interior, one rank-one piece per facet.
    pub fn from_polytope(p: &HPolyhedron) -> Result<Self> {
        let mut cones = Vec::new();
        let mut q = Vec::new();
        for (cone, k) in facet_cones_indexed(p)? {
            let (a, b) = &p.rows()[k];
            q.push(SymmetricMatrix::outer(&(a / *b)));
            cones.push(cone);
        }
        Self::new(build_partition(cones)?, q)
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn partition(&self) -> &ConicPartition {
        &self.partition
    }

    pub fn matrices(&self) -> &[SymmetricMatrix] {
        &self.q
    }

    pub fn matrix(&self, i: usize) -> &SymmetricMatrix {
        &self.q[i]
    }

    /// Same partition with every matrix multiplied by `t ≥ 0`.
    pub fn scaled_matrices(&self, t: f64) -> Result<Self> {
        Self::new(
            self.partition.clone(),
            self.q.iter().map(|m| m.scale(t)).collect(),
        )
    }

    fn piece_for(&self, x: &DVector<f64>) -> Option<usize> {
        if let Some(i) = self.partition.locate(x) {
            return Some(i);
        }
        let (i, viol) = self.partition.nearest(x)?;
        (viol <= FALLBACK_TOL * x.norm().max(1.0)).then_some(i)
    }

    /// Minkowski function at `x`; `+∞` outside the union of the pieces.
    pub fn gauge(&self, x: &DVector<f64>) -> Result<ExtendedReal> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} in dimension {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().all(|v| *v == 0.0) {
            return Ok(ExtendedReal::Finite(0.0));
        }
        let Some(i) = self.piece_for(x) else {
            return if self.partition.is_complete() {
                Err(Error::NoPieceContains)
            } else {
                Ok(ExtendedReal::Infinity)
            };
        };
        let v = self.q[i].quad_form(x).max(0.0);
        #[cfg(debug_assertions)]
        for j in self.partition.containing(x, MEMBERSHIP_TOL) {
            let w = self.q[j].quad_form(x).max(0.0);
            debug_assert!(
                (v - w).abs() <= 1e-6 * (1.0 + v.max(w)),
                "pieces {i} and {j} disagree at {x:?}: {v} vs {w}"
            );
        }
        Ok(ExtendedReal::Finite(v.sqrt()))
    }

    /// `gauge(x) ≤ 1 + 1e-9`.
    pub fn sublevel_contains(&self, x: &DVector<f64>) -> Result<bool> {
        Ok(self.gauge(x)?.le_tol(ExtendedReal::Finite(1.0), 1e-9))
    }

    /// Support function `max_{x ∈ S} yᵀx`, evaluated as the gauge of the polar.
    pub fn support(&self, y: &DVector<f64>) -> Result<ExtendedReal> {
        self.polar_ref()?.gauge(y)
    }

    /// The point `d / gauge(d)` on the boundary, `None` along unbounded directions.
    pub fn boundary_point(&self, d: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        match self.gauge(d)? {
            ExtendedReal::Finite(g) if g > 1e-14 => Ok(Some(d / g)),
            _ => Ok(None),
        }
    }

    /// The polar, computed once and cached.
    pub fn polar_ref(&self) -> Result<&PiecewiseSemiEllipsoid> {
        match self
            .polar_cache
            .get_or_init(|| self.compute_polar().map(Box::new))
        {
            Ok(p) => Ok(p),
            Err(e) => Err(e.clone()),
        }
    }

    pub fn polar(&self) -> Result<PiecewiseSemiEllipsoid> {
        self.polar_ref().cloned()
    }

    /// Uncached polar; [`polar`](Self::polar) memoizes this.
    pub fn compute_polar(&self) -> Result<PiecewiseSemiEllipsoid> {
        let n = self.dim();
        let m = self.partition.len();
        let mut snap = Snapper::default();
        let mut pieces: Vec<HPolyhedron> = Vec::new();
        let mut mats: Vec<SymmetricMatrix> = Vec::new();

        // Images Qᵢ Pᵢ carry the pseudoinverses.
        for i in 0..m {
            let q = self.q[i].to_dmatrix();
            let gens: Vec<DVector<f64>> = self
                .partition
                .rays(i)
                .iter()
                .filter_map(|r| snap.snap(&q * r))
                .collect();
            if rank(&gens, 1e-9) < n {
                continue;
            }
            pieces.push(VPolyhedron::cone(n, gens)?.to_hrep()?);
            mats.push(pseudoinverse(&self.q[i], crate::linalg::DEFAULT_RANK_TOL)?);
        }

        // Each common face F of the pieces in I yields conv_{i∈I} Qᵢ F.
        for (set, face) in self.common_faces() {
            let span = Subspace::span(n, &face, 1e-9);
            let e = span.basis_rows();
            let first = set[0];
            let restricted = self.q[first].congruence(&e);
            for &j in &set[1..] {
                let other = self.q[j].congruence(&e);
                let residual = restricted.max_abs_diff(&other);
                if residual > FACE_TOL * restricted.norm().max(1.0) {
                    return Err(Error::InconsistentFace {
                        i: first,
                        j,
                        residual,
                    });
                }
            }
            let mut gens = Vec::new();
            for &i in &set {
                let q = self.q[i].to_dmatrix();
                gens.extend(face.iter().filter_map(|r| snap.snap(&q * r)));
            }
            if rank(&gens, 1e-9) < n {
                continue;
            }
            let inner = pseudoinverse(&restricted, crate::linalg::DEFAULT_RANK_TOL)?;
            let mat = inner.congruence(&e.transpose());
            pieces.push(VPolyhedron::cone(n, gens)?.to_hrep()?);
            mats.push(mat);
        }

        if pieces.is_empty() {
            // No full-dimensional piece survives: the polar is reduced to the origin.
            return PiecewiseSemiEllipsoid::new(ConicPartition::empty(n), Vec::new());
        }
        PiecewiseSemiEllipsoid::new(build_partition_partial(pieces)?, mats)
    }

    /// Faces `⋂_{i∈I} Pᵢ` of dimension ≥ 1 shared by at least two pieces,
    /// keyed by their full index set `I = {i : F ⊆ Pᵢ}`.
    fn common_faces(&self) -> Vec<(Vec<usize>, Vec<DVector<f64>>)> {
        let m = self.partition.len();
        let n = self.dim();
        let closure = |rays: &[DVector<f64>]| -> Vec<usize> {
            (0..m)
                .filter(|&k| {
                    rays.iter()
                        .all(|r| self.partition.piece(k).contains(r, 1e-9))
                })
                .collect()
        };
        let face_of = |set: &[usize]| -> Option<Vec<DVector<f64>>> {
            let mut rows = Vec::new();
            for &i in set {
                rows.extend(self.partition.piece(i).rows().iter().cloned());
            }
            let v = HPolyhedron::new(n, rows).ok()?.to_vrep().ok()?;
            (v.dim() >= 1).then_some(v.rays)
        };

        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut out = Vec::new();
        let mut queue: VecDeque<Vec<usize>> = VecDeque::new();
        for i in 0..m {
            for j in i + 1..m {
                queue.push_back(vec![i, j]);
            }
        }
        while let Some(set) = queue.pop_front() {
            let Some(rays) = face_of(&set) else {
                continue;
            };
            let full = closure(&rays);
            if full.len() < 2 || !seen.insert(full.clone()) {
                continue;
            }
            for k in 0..m {
                if !full.contains(&k) {
                    let mut next = full.clone();
                    next.push(k);
                    next.sort_unstable();
                    queue.push_back(next);
                }
            }
            out.push((full, rays));
        }
        out
    }

    /// Continuity, convexity and PSD conditions; empty when all hold.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, q) in self.q.iter().enumerate() {
            let lmin = min_eigenvalue(q);
            if lmin < -1e-9 * q.norm().max(1.0) {
                out.push(Violation {
                    kind: ViolationKind::NotPsd,
                    i,
                    j: i,
                    residual: -lmin,
                });
            }
        }
        for nb in self.partition.neighbors() {
            let (qi, qj) = (&self.q[nb.i], &self.q[nb.j]);
            let diff = qi.sub(qj);
            let span = Subspace::span(self.dim(), &nb.face_rays, 1e-9);
            let e = span.basis_rows();
            let restricted = diff.congruence(&e);
            let residual = restricted.max_abs();
            let scale = qi.norm().max(qj.norm()).max(1.0);
            if residual > VALIDATE_TOL * scale {
                out.push(Violation {
                    kind: ViolationKind::Continuity,
                    i: nb.i,
                    j: nb.j,
                    residual,
                });
            }
            let mut worst: f64 = 0.0;
            for v in &nb.face_rays {
                let gap = nb.normal.dot(&qj.mul_vec(v)) - nb.normal.dot(&qi.mul_vec(v));
                worst = worst.max(gap);
            }
            if worst > VALIDATE_TOL * scale {
                out.push(Violation {
                    kind: ViolationKind::Convexity,
                    i: nb.i,
                    j: nb.j,
                    residual: worst,
                });
            }
        }
        out
    }
}

/// Identifies nearly parallel image rays so that thin cones collapse exactly.
#[derive(Default)]
struct Snapper {
    reps: Vec<DVector<f64>>,
}

impl Snapper {
    fn snap(&mut self, v: DVector<f64>) -> Option<DVector<f64>> {
        let norm = v.norm();
        if norm <= 1e-12 {
            return None;
        }
        let u = v / norm;
        if let Some(r) = self.reps.iter().find(|r| (*r - &u).amax() < SNAP_TOL) {
            return Some(r.clone());
        }
        self.reps.push(u.clone());
        Some(u)
    }
}

/// Row-major matrix helper for building small symmetric matrices in tests and fixtures.
pub fn sym(rows: &[&[f64]]) -> SymmetricMatrix {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    SymmetricMatrix::from_dmatrix(&m)
}
