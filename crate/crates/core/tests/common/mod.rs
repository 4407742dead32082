//! Test-side oracles. Nothing here calls into the library except to build
//! the objects under test.

#![allow(dead_code)]

use std::f64::consts::PI;

use invkit::polyhedra::{build_partition, HPolyhedron};
use invkit::{PiecewiseSemiEllipsoid, SymmetricMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v2(x: f64, y: f64) -> DVector<f64> {
    DVector::from_column_slice(&[x, y])
}

/// `count` unit vectors of the plane at evenly spaced angles, offset so none is axis aligned.
pub fn circle(count: usize) -> Vec<DVector<f64>> {
    (0..count)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.37) / count as f64;
            v2(t.cos(), t.sin())
        })
        .collect()
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller keeps this file free of extra distributions.
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| gaussian(rng))
}

pub fn unit_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

pub fn gaussian_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| gaussian(rng))
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    gaussian_mat(rng, n, n).qr().q()
}

pub fn sym_from(m: &DMatrix<f64>) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// `U diag(d) Uᵀ` for a random rotation `U`.
pub fn with_spectrum(rng: &mut ChaCha8Rng, d: &[f64]) -> SymmetricMatrix {
    let u = random_orthogonal(rng, d.len());
    let m = &u * DMatrix::from_diagonal(&DVector::from_column_slice(d)) * u.transpose();
    sym_from(&m)
}

pub fn quad(q: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    (x.transpose() * q * x)[(0, 0)]
}

/// A convex, continuously differentiable, 2-homogeneous planar function
/// `f(x) = xᵀQ₀x + Σ c_k max(0, n_kᵀx)²`. Its square root is the gauge of a
/// piecewise semi-ellipsoid on the sectors cut out by the lines `n_kᵀx = 0`.
#[derive(Clone, Debug)]
pub struct HingeGauge {
    pub q0: DMatrix<f64>,
    pub normals: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl HingeGauge {
    /// `lines` lines through the origin at least 0.25 rad apart, so `2·lines` sectors.
    pub fn random(rng: &mut ChaCha8Rng, lines: usize) -> Self {
        let angles = loop {
            let mut a: Vec<f64> = (0..lines).map(|_| rng.random::<f64>() * PI).collect();
            a.sort_by(f64::total_cmp);
            let gaps_ok =
                a.windows(2).all(|w| w[1] - w[0] > 0.25) && (a[0] + PI - a[lines - 1]) > 0.25;
            if gaps_ok {
                break a;
            }
        };
        let e1 = 0.3 + 2.7 * rng.random::<f64>();
        let e2 = 0.3 + 2.7 * rng.random::<f64>();
        let t = rng.random::<f64>() * PI;
        let r = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let q0 =
            &r * DMatrix::from_diagonal(&DVector::from_column_slice(&[e1, e2])) * r.transpose();
        Self {
            q0,
            normals: angles.iter().map(|a| v2(-a.sin(), a.cos())).collect(),
            weights: (0..lines)
                .map(|_| 0.2 + 1.8 * rng.random::<f64>())
                .collect(),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let mut f = quad(&self.q0, x);
        for (n, c) in self.normals.iter().zip(&self.weights) {
            let s = n.dot(x).max(0.0);
            f += c * s * s;
        }
        f.max(0.0).sqrt()
    }

    fn matrix_at(&self, m: &DVector<f64>) -> DMatrix<f64> {
        let mut q = self.q0.clone();
        for (n, c) in self.normals.iter().zip(&self.weights) {
            if n.dot(m) > 0.0 {
                q += *c * n * n.transpose();
            }
        }
        q
    }

    pub fn to_pwse(&self) -> PiecewiseSemiEllipsoid {
        let mut rays: Vec<f64> = self
            .normals
            .iter()
            .flat_map(|n| {
                let a = (-n[0]).atan2(n[1]).rem_euclid(2.0 * PI);
                [a, (a + PI).rem_euclid(2.0 * PI)]
            })
            .collect();
        rays.sort_by(f64::total_cmp);
        let k = rays.len();
        let mut cones = Vec::new();
        let mut mats = Vec::new();
        for i in 0..k {
            let a = rays[i];
            let b = if i + 1 < k {
                rays[i + 1]
            } else {
                rays[0] + 2.0 * PI
            };
            let (r1, r2) = (v2(a.cos(), a.sin()), v2(b.cos(), b.sin()));
            let mid = 0.5 * (a + b);
            // cross(r1, x) ≥ 0 and cross(x, r2) ≥ 0, written as rows aᵀx ≤ 0.
            let mut normals = vec![v2(r1[1], -r1[0])];
            let second = v2(-r2[1], r2[0]);
            if (&second - &normals[0]).norm() > 1e-12 {
                normals.push(second);
            }
            cones.push(HPolyhedron::cone(2, normals).unwrap());
            mats.push(sym_from(&self.matrix_at(&v2(mid.cos(), mid.sin()))));
        }
        PiecewiseSemiEllipsoid::new(build_partition(cones).unwrap(), mats).unwrap()
    }

    /// Both eigenvalue bounds of the quadratic form sandwiching `value²`.
    pub fn bounds(&self) -> (f64, f64) {
        let e = self.q0.clone().symmetric_eigen().eigenvalues;
        let lo = e.min();
        let hi = e.max() + self.weights.iter().sum::<f64>();
        (lo.sqrt(), hi.sqrt())
    }
}

/// Max of `yᵀv` over a finite point set.
pub fn support_of_points(points: &[DVector<f64>], y: &DVector<f64>) -> f64 {
    points
        .iter()
        .map(|v| v.dot(y))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Vertices of `{x : a_kᵀx ≤ b_k}` by brute force over every `n`-subset of rows.
pub fn brute_vertices(rows: &[(DVector<f64>, f64)], n: usize) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    let m = rows.len();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| rows[idx[i]].0[j]);
        let b = DVector::from_fn(n, |i, _| rows[idx[i]].1);
        if a.determinant().abs() > 1e-10 {
            if let Some(x) = a.lu().solve(&b) {
                let feasible = rows.iter().all(|(r, c)| r.dot(&x) <= c + 1e-9);
                if feasible && out.iter().all(|v| (v - &x).norm() > 1e-7) {
                    out.push(x);
                }
            }
        }
        // Next combination in lexicographic order.
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] < m - n + k {
                idx[k] += 1;
                for l in k + 1..n {
                    idx[l] = idx[l - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A bounded polytope `{aᵀx ≤ b}` with the origin well inside: a box of
/// half-width `r` cut by `extra` random halfspaces at distance in `[0.3, 1]`.
pub fn random_polytope_rows(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra: usize,
    r: f64,
) -> Vec<(DVector<f64>, f64)> {
    let mut rows = Vec::new();
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        rows.push((e.clone(), r));
        rows.push((-e, r));
    }
    for _ in 0..extra {
        rows.push((unit_vec(rng, n), 0.3 + 0.7 * rng.random::<f64>()));
    }
    rows
}

/// Pivoted `LDLᵀ` with symmetric pivoting: PSD exactly when no pivot drops
/// below `-tol` and the trailing block vanishes once pivots fall under `tol`.
pub fn pivoted_cholesky_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    let mut a = m.clone();
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        let (pos, &p) = active
            .iter()
            .enumerate()
            .max_by(|x, y| a[(*x.1, *x.1)].total_cmp(&a[(*y.1, *y.1)]))
            .unwrap();
        let d = a[(p, p)];
        if d < -tol {
            return false;
        }
        if d <= tol {
            // A PSD matrix with a vanishing diagonal has vanishing rows there.
            return active
                .iter()
                .all(|&i| active.iter().all(|&j| a[(i, j)].abs() <= tol.sqrt()));
        }
        active.remove(pos);
        for &i in &active {
            for &j in &active {
                a[(i, j)] -= a[(i, p)] * a[(p, j)] / d;
            }
        }
    }
    true
}
