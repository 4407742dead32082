//! Small dense symmetric linear algebra.
//!
//! Matrices in this crate are tiny (a handful of rows), so the routines here
//! favour accuracy over asymptotic cost: eigenvalues come from a cyclic
//! Jacobi sweep, which keeps small eigenvalues relatively accurate. That
//! matters when deciding numerical rank for pseudoinverses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative tolerance below which eigenvalues count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Dense symmetric matrix stored as its packed upper triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "symmetric matrix dimension must be positive");
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Symmetric part `(M + Mᵀ)/2` of a square dense matrix.
    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Parses row-major rows, rejecting non-square or visibly asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(
                "symmetric matrix must be square and non-empty".into(),
            ));
        }
        for i in 0..n {
            for j in 0..i {
                let scale = 1.0f64.max(rows[i][j].abs()).max(rows[j][i].abs());
                if (rows[i][j] - rows[j][i]).abs() > 1e-9 * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    /// Outer product `a aᵀ`.
    pub fn outer(a: &DVector<f64>) -> Self {
        Self::from_fn(a.len(), |i, j| a[i] * a[j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = packed_index(self.n, i, j);
        self.data[k] = v;
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.get(i, i) * x[i] * x[i];
            for j in (i + 1)..self.n {
                s += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        s
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            (0..self.n).map(|j| self.get(i, j) * x[j]).sum()
        })
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * t).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `T M Tᵀ` for a rectangular `T`.
    pub fn congruence(&self, t: &DMatrix<f64>) -> Self {
        assert_eq!(t.ncols(), self.n);
        Self::from_dmatrix(&(t * self.to_dmatrix() * t.transpose()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }
}

/// Eigendecomposition `M = V diag(λ) Vᵀ` with ascending eigenvalues.
pub fn eig_sym(m: &SymmetricMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.dim();
    let mut a = m.to_dmatrix();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-18 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &SymmetricMatrix) -> f64 {
    eig_sym(m).0[0]
}

pub fn is_psd(m: &SymmetricMatrix, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol * m.norm().max(1.0)
}

/// Moore-Penrose pseudoinverse of a PSD matrix.
///
/// Eigenvalues below `rank_tol * λ_max` are treated as zero.
pub fn pseudoinverse(m: &SymmetricMatrix, rank_tol: f64) -> Result<SymmetricMatrix> {
    let (values, vectors) = eig_sym(m);
    let lmax = values.last().copied().unwrap_or(0.0).max(0.0);
    if values[0] < -1e-8 * m.norm().max(1.0) {
        return Err(Error::NotPsd(values[0]));
    }
    let n = m.dim();
    let mut out = SymmetricMatrix::zeros(n);
    if lmax == 0.0 {
        return Ok(out);
    }
    for (k, &l) in values.iter().enumerate() {
        if l <= rank_tol * lmax {
            continue;
        }
        let inv = 1.0 / l;
        for i in 0..n {
            for j in i..n {
                let cur = out.get(i, j);
                out.set(i, j, cur + inv * vectors[(i, k)] * vectors[(j, k)]);
            }
        }
    }
    Ok(out)
}

/// Linear subspace of `ℝⁿ` described by an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Subspace {
    n: usize,
    basis: Vec<DVector<f64>>,
}

impl Subspace {
    pub fn full(n: usize) -> Self {
        Self {
            n,
            basis: (0..n).map(|i| unit(n, i)).collect(),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self { n, basis: vec![] }
    }

    /// Span of arbitrary vectors; directions with singular value below `tol`
    /// (relative to the largest) are discarded.
    pub fn span(n: usize, vectors: &[DVector<f64>], tol: f64) -> Self {
        if vectors.is_empty() {
            return Self::zero(n);
        }
        let m = DMatrix::from_columns(vectors);
        Self::column_space(&m, tol)
    }

    /// Image of a matrix (its column space).
    pub fn column_space(m: &DMatrix<f64>, tol: f64) -> Self {
        let n = m.nrows();
        if m.ncols() == 0 {
            return Self::zero(n);
        }
        let svd = m.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.max();
        if smax <= 1e-300 {
            return Self::zero(n);
        }
        let basis = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > tol * smax)
            .map(|(k, _)| u.column(k).into_owned())
            .collect();
        Self { n, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DVector<f64>] {
        &self.basis
    }

    /// Basis vectors as the rows of a `dim × n` matrix.
    pub fn basis_rows(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.dim(), self.n);
        for (k, b) in self.basis.iter().enumerate() {
            w.row_mut(k).copy_from(&b.transpose());
        }
        w
    }
}

pub fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

pub fn projection_matrix(s: &Subspace) -> SymmetricMatrix {
    let mut p = SymmetricMatrix::zeros(s.ambient_dim());
    for b in s.basis() {
        p = p.add(&SymmetricMatrix::outer(b));
    }
    p
}

pub fn orthogonal_complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim();
    let residual = SymmetricMatrix::identity(n).sub(&projection_matrix(s));
    let (values, vectors) = eig_sym(&residual);
    let basis = values
        .iter()
        .enumerate()
        .filter(|(_, l)| **l > 0.5)
        .map(|(k, _)| vectors.column(k).into_owned())
        .collect();
    Subspace { n, basis }
}

/// Numerical rank of a set of vectors.
pub fn rank(vectors: &[DVector<f64>], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    Subspace::span(vectors[0].len(), vectors, tol).dim()
}

/// Null space `{x : M x = 0}`.
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> Subspace {
    let rows: Vec<DVector<f64>> = (0..m.nrows()).map(|i| m.row(i).transpose()).collect();
    orthogonal_complement(&Subspace::span(m.ncols(), &rows, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[&[f64]]) -> SymmetricMatrix {
        SymmetricMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn packed_storage_is_symmetric() {
        let mut m = SymmetricMatrix::zeros(3);
        m.set(2, 0, 5.0);
        assert_eq!(m.get(0, 2), 5.0);
        m.set(1, 1, 2.0);
        assert_eq!(m.to_dmatrix()[(1, 1)], 2.0);
        let seen: std::collections::BTreeSet<_> = (0..3)
            .flat_map(|i| (i..3).map(move |j| packed_index(3, i, j)))
            .collect();
        assert_eq!(seen.len(), 6);
        assert_eq!(*seen.iter().max().unwrap(), 5);
    }

    #[test]
    fn eigenvalues_of_small_examples() {
        let (l, _) = eig_sym(&SymmetricMatrix::identity(2));
        assert_eq!(l, vec![1.0, 1.0]);

        let (l, v) = eig_sym(&sym(&[&[1.0, -0.5], &[-0.5, 1.0]]));
        assert!((l[0] - 0.5).abs() < 1e-14 && (l[1] - 1.5).abs() < 1e-14);
        let recon = &v * DMatrix::from_diagonal(&DVector::from_vec(l)) * v.transpose();
        assert!((recon[(0, 1)] + 0.5).abs() < 1e-12);

        let (l, _) = eig_sym(&SymmetricMatrix::from_diagonal(&[4.0, 0.0]));
        assert_eq!(l, vec![0.0, 4.0]);
    }

    #[test]
    fn psd_checks() {
        assert!(!is_psd(&sym(&[&[0.0, 1.0], &[1.0, 0.0]]), 1e-9));
        assert!(is_psd(&SymmetricMatrix::zeros(2), 1e-9));
        assert!(is_psd(&sym(&[&[1.0, -0.5], &[-0.5, 1.0]]), 1e-9));
    }

    #[test]
    fn pseudoinverse_examples() {
        let q5 = sym(&[&[1.0, -0.5], &[-0.5, 1.0]]);
        let p = pseudoinverse(&q5, DEFAULT_RANK_TOL).unwrap();
        let expected = sym(&[&[4.0 / 3.0, 2.0 / 3.0], &[2.0 / 3.0, 4.0 / 3.0]]);
        assert!(p.max_abs_diff(&expected) < 1e-12);

        let id = SymmetricMatrix::identity(3);
        assert!(
            pseudoinverse(&id, DEFAULT_RANK_TOL)
                .unwrap()
                .max_abs_diff(&id)
                < 1e-14
        );

        let d = SymmetricMatrix::from_diagonal(&[2.0, 0.0]);
        let p = pseudoinverse(&d, DEFAULT_RANK_TOL).unwrap();
        assert!(p.max_abs_diff(&SymmetricMatrix::from_diagonal(&[0.5, 0.0])) < 1e-14);

        assert!(matches!(
            pseudoinverse(&sym(&[&[0.0, 1.0], &[1.0, 0.0]]), DEFAULT_RANK_TOL),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn projections_and_complements() {
        let e1 = Subspace::span(2, &[unit(2, 0)], 1e-12);
        assert!(
            projection_matrix(&e1).max_abs_diff(&SymmetricMatrix::from_diagonal(&[1.0, 0.0]))
                < 1e-14
        );
        assert!(
            projection_matrix(&Subspace::full(2)).max_abs_diff(&SymmetricMatrix::identity(2))
                < 1e-14
        );

        let diag = Subspace::span(2, &[DVector::from_vec(vec![1.0, 1.0])], 1e-12);
        let p = projection_matrix(&diag);
        assert!(p.max_abs_diff(&sym(&[&[0.5, 0.5], &[0.5, 0.5]])) < 1e-14);

        let e2 = Subspace::span(2, &[unit(2, 1)], 1e-12);
        let c = orthogonal_complement(&e2);
        assert_eq!(c.dim(), 1);
        assert!((c.basis()[0][0].abs() - 1.0).abs() < 1e-12);

        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let c = orthogonal_complement(&Subspace::column_space(&b, 1e-12));
        assert_eq!(c.dim(), 1);
        assert!(c.basis()[0][1].abs() < 1e-12);

        assert_eq!(orthogonal_complement(&Subspace::full(3)).dim(), 0);
    }

    #[test]
    fn null_space_of_row() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.dim(), 2);
        for b in ns.basis() {
            assert!((b[0] + b[1]).abs() < 1e-12);
        }
    }
}
