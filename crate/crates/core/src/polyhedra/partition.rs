//! Conic partitions of ℝⁿ: full-dimensional polyhedral cones meeting only in
//! lower-dimensional faces, with the facet neighbor structure.

use nalgebra::DVector;
use rand::Rng;

use super::dd::cone_generators;
use super::{HPolyhedron, VPolyhedron};
use crate::error::{Error, Result};
use crate::linalg::{orthogonal_complement, rank, unit, Subspace};
use crate::sampling;

/// Membership tolerance on cone inequalities.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
const COVERAGE_SAMPLES: usize = 2000;

/// Two pieces sharing an `(n−1)`-dimensional face.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub i: usize,
    pub j: usize,
    /// Unit normal of the common face, pointing into piece `i`.
    pub normal: DVector<f64>,
    /// Generators of the common face; a line appears as two opposite rays.
    pub face_rays: Vec<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicPartition {
    n: usize,
    pieces: Vec<HPolyhedron>,
    generators: Vec<Vec<DVector<f64>>>,
    neighbors: Vec<Neighbor>,
    complete: bool,
}

impl ConicPartition {
    /// No pieces at all; only the origin is covered.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            pieces: Vec::new(),
            generators: Vec::new(),
            neighbors: Vec::new(),
            complete: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn pieces(&self) -> &[HPolyhedron] {
        &self.pieces
    }

    pub fn piece(&self, i: usize) -> &HPolyhedron {
        &self.pieces[i]
    }

    /// Extreme rays of piece `i` (lines as opposite pairs).
    pub fn rays(&self, i: usize) -> &[DVector<f64>] {
        &self.generators[i]
    }

    /// Unordered neighbor pairs with `i < j`.
    pub fn neighbors(&self) -> &[Neighbor] {
        &self.neighbors
    }

    /// `n_ij`, pointing into piece `i`; `n_ji = −n_ij`.
    pub fn normal(&self, i: usize, j: usize) -> Option<DVector<f64>> {
        self.neighbors.iter().find_map(|nb| {
            if nb.i == i && nb.j == j {
                Some(nb.normal.clone())
            } else if nb.i == j && nb.j == i {
                Some(-&nb.normal)
            } else {
                None
            }
        })
    }

    /// Whether the pieces cover the whole space.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Indices of pieces containing `x` at the given tolerance (relative to ‖x‖).
    pub fn containing(&self, x: &DVector<f64>, tol: f64) -> Vec<usize> {
        let s = tol * x.norm().max(1.0);
        (0..self.pieces.len())
            .filter(|&i| self.pieces[i].contains(x, s))
            .collect()
    }

    /// First piece containing `x` at the membership tolerance.
    pub fn locate(&self, x: &DVector<f64>) -> Option<usize> {
        let s = MEMBERSHIP_TOL * x.norm().max(1.0);
        self.pieces.iter().position(|p| p.contains(x, s))
    }

    /// Piece with the smallest violation at `x`.
    pub fn nearest(&self, x: &DVector<f64>) -> Option<(usize, f64)> {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.max_violation(x).max(0.0)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Validates a conic partition of the whole space.
pub fn build_partition(cones: Vec<HPolyhedron>) -> Result<ConicPartition> {
    build(cones, true)
}

/// As [`build_partition`], but a union that misses part of the space is
/// recorded in [`ConicPartition::is_complete`] instead of rejected.
pub fn build_partition_partial(cones: Vec<HPolyhedron>) -> Result<ConicPartition> {
    build(cones, false)
}

fn flatten(g: &super::dd::ConeGenerators) -> Vec<DVector<f64>> {
    let mut out = g.rays.clone();
    for l in &g.lines {
        out.push(l.clone());
        out.push(-l);
    }
    out
}

fn build(cones: Vec<HPolyhedron>, require_complete: bool) -> Result<ConicPartition> {
    let Some(first) = cones.first() else {
        return Err(Error::NotCovering("no pieces".into()));
    };
    let n = first.ambient_dim();
    let mut generators = Vec::with_capacity(cones.len());
    for (i, c) in cones.iter().enumerate() {
        if c.ambient_dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "piece {i} lives in dimension {}",
                c.ambient_dim()
            )));
        }
        if !c.is_cone() {
            return Err(Error::InvalidInput(format!("piece {i} is not a cone")));
        }
        let g = cone_generators(n, &normals(c));
        if g.dim() != n {
            return Err(Error::DegeneratePiece(i));
        }
        generators.push(flatten(&g));
    }

    let mut neighbors = Vec::new();
    for i in 0..cones.len() {
        for j in i + 1..cones.len() {
            let mut rows = normals(&cones[i]);
            rows.extend(normals(&cones[j]));
            let g = cone_generators(n, &rows);
            let d = g.dim();
            if d == n {
                return Err(Error::OverlappingPieces(i, j));
            }
            if d + 1 != n {
                continue;
            }
            let face_rays = flatten(&g);
            let span = Subspace::span(n, &face_rays, 1e-9);
            let comp = orthogonal_complement(&span);
            let mut normal = comp.basis()[0].clone();
            let side: f64 = generators[i].iter().map(|r| normal.dot(r)).sum();
            if side < 0.0 {
                normal = -normal;
            }
            neighbors.push(Neighbor {
                i,
                j,
                normal,
                face_rays,
            });
        }
    }

    let mut part = ConicPartition {
        n,
        pieces: cones,
        generators,
        neighbors,
        complete: true,
    };
    if let Err(e) = check_coverage(&part) {
        if require_complete {
            return Err(e);
        }
        part.complete = false;
    }
    Ok(part)
}

fn normals(c: &HPolyhedron) -> Vec<DVector<f64>> {
    c.rows().iter().map(|(a, _)| a.clone()).collect()
}

/// Every facet of every piece is continued by another piece just across it,
/// and random directions all land in some piece.
fn check_coverage(p: &ConicPartition) -> Result<()> {
    let n = p.n;
    let mut rng = sampling::rng(0x5eed);
    for (i, piece) in p.pieces.iter().enumerate() {
        for (a, _) in piece.rows() {
            let tight: Vec<DVector<f64>> = p.generators[i]
                .iter()
                .filter(|r| a.dot(r).abs() <= 1e-9)
                .cloned()
                .collect();
            if rank(&tight, 1e-9) + 1 != n {
                continue;
            }
            for k in 0..8 {
                let mut x = DVector::zeros(n);
                for r in &tight {
                    let w: f64 = if k == 0 {
                        1.0
                    } else {
                        rng.random::<f64>() + 0.05
                    };
                    x += r * w;
                }
                let scale = x.norm().max(1.0);
                let probe = &x + a * (1e-6 * scale);
                let hit = (0..p.pieces.len())
                    .any(|j| j != i && p.pieces[j].contains(&probe, 1e-9 * scale));
                if !hit {
                    return Err(Error::NotCovering(format!(
                        "nothing continues piece {i} across its facet with normal {:?}",
                        a.as_slice()
                    )));
                }
            }
        }
    }
    if n == 1 {
        for x in [1.0, -1.0] {
            let v = DVector::from_element(1, x);
            if p.locate(&v).is_none() {
                return Err(Error::NotCovering(format!("direction {x}")));
            }
        }
        return Ok(());
    }
    for _ in 0..COVERAGE_SAMPLES {
        let d = sampling::direction(&mut rng, n);
        if p.pieces.iter().all(|c| !c.contains(&d, 1e-9)) {
            return Err(Error::NotCovering(format!(
                "direction {:?} is in no piece",
                d.as_slice()
            )));
        }
    }
    Ok(())
}

/// One cone per facet of a polytope with the origin in its interior: the
/// conic hull of the facet.
pub fn facet_cones(p: &HPolyhedron) -> Result<Vec<HPolyhedron>> {
    Ok(facet_cones_indexed(p)?
        .into_iter()
        .map(|(c, _)| c)
        .collect())
}

/// As [`facet_cones`], paired with the index of the defining row of `p`.
pub fn facet_cones_indexed(p: &HPolyhedron) -> Result<Vec<(HPolyhedron, usize)>> {
    let n = p.ambient_dim();
    if p.rows().iter().any(|(_, b)| *b <= 1e-12) {
        return Err(Error::OriginNotContained);
    }
    let vertices = p.vertices()?;
    let mut cones = Vec::new();
    for (k, (a, b)) in p.rows().iter().enumerate() {
        let on: Vec<DVector<f64>> = vertices
            .iter()
            .filter(|v| (a.dot(v) - b).abs() <= 1e-8 * b.max(1.0))
            .cloned()
            .collect();
        if rank(&on, 1e-9) != n {
            continue;
        }
        cones.push((VPolyhedron::cone(n, on)?.to_hrep()?, k));
    }
    Ok(cones)
}

/// The `2ⁿ` orthants; bit `k` of the index selects `x_k ≤ 0`.
pub fn orthants(n: usize) -> Vec<HPolyhedron> {
    (0..1usize << n)
        .map(|mask| {
            let rows = (0..n)
                .map(|k| {
                    let s = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
                    (unit(n, k) * s, 0.0)
                })
                .collect();
            HPolyhedron::new(n, rows).expect("orthant rows are well formed")
        })
        .collect()
}

/// Orthants, listed counterclockwise from the positive quadrant in the plane.
pub fn quadrants(n: usize) -> Vec<HPolyhedron> {
    let mut o = orthants(n);
    if n == 2 {
        o.swap(2, 3);
    }
    o
}
