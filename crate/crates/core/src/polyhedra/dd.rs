//! Incremental double description for cones `{y : a_kᵀ y ≤ 0}`.
//!
//! Lineality is tracked as an orthonormal basis and peeled off as soon as a
//! constraint cuts it; extreme rays carry their incidence sets so adjacency
//! is decided combinatorially.

use nalgebra::DVector;

/// Incidence threshold on normalized rows and rays.
pub(crate) const DD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default)]
pub(crate) struct ConeGenerators {
    /// Orthonormal basis of the lineality space.
    pub lines: Vec<DVector<f64>>,
    /// Extreme rays, unit norm, orthogonal to the lineality space.
    pub rays: Vec<DVector<f64>>,
}

impl ConeGenerators {
    pub fn dim(&self) -> usize {
        let mut all: Vec<DVector<f64>> = self.lines.clone();
        all.extend(self.rays.iter().cloned());
        crate::linalg::rank(&all, 1e-9)
    }
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64).max(1)])
    }
    fn full(len: usize) -> Self {
        let mut b = Self::new(len);
        for k in 0..len {
            b.set(k);
        }
        b
    }
    fn set(&mut self, k: usize) {
        let w = k / 64;
        if w >= self.0.len() {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << (k % 64);
    }
    fn and(&self, other: &Bits) -> Bits {
        let len = self.0.len().max(other.0.len());
        Bits(
            (0..len)
                .map(|i| self.0.get(i).unwrap_or(&0) & other.0.get(i).unwrap_or(&0))
                .collect(),
        )
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn is_subset_of(&self, other: &Bits) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, w)| w & !other.0.get(i).unwrap_or(&0) == 0)
    }
}

struct Ray {
    v: DVector<f64>,
    zero: Bits,
}

fn normalize(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    (n > 1e-14).then(|| v / n)
}

fn orthonormalize(vs: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for mut v in vs {
        for _ in 0..2 {
            for b in &out {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        if let Some(u) = normalize(v) {
            if out.iter().all(|b| b.dot(&u).abs() < 1.0 - 1e-12) {
                out.push(u);
            }
        }
    }
    out
}

/// Generators of `{y ∈ ℝᵈ : a_kᵀ y ≤ 0 for all k}`.
pub(crate) fn cone_generators(d: usize, rows: &[DVector<f64>]) -> ConeGenerators {
    let mut lines: Vec<DVector<f64>> = (0..d).map(|i| crate::linalg::unit(d, i)).collect();
    let mut rays: Vec<Ray> = Vec::new();
    let mut processed = 0usize;

    for a in rows {
        let Some(a) = normalize(a.clone()) else {
            continue;
        };
        let k = processed;
        processed += 1;

        // A line not orthogonal to `a` becomes a ray; the others project onto aᵀy = 0.
        let pivot = lines
            .iter()
            .enumerate()
            .map(|(i, l)| (i, a.dot(l)))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()));
        if let Some((pi, pv)) = pivot.filter(|p| p.1.abs() > DD_TOL) {
            let mut l0 = lines.swap_remove(pi);
            let mut al0 = pv;
            if al0 > 0.0 {
                l0 = -l0;
                al0 = -al0;
            }
            let rest: Vec<DVector<f64>> =
                lines.iter().map(|l| l - &l0 * (a.dot(l) / al0)).collect();
            lines = orthonormalize(rest);
            for r in rays.iter_mut() {
                let c = a.dot(&r.v) / al0;
                r.v = normalize(&r.v - &l0 * c).unwrap_or_else(|| r.v.clone());
                r.zero.set(k);
            }
            // Keep rays orthogonal to the remaining lineality.
            for r in rays.iter_mut() {
                for l in &lines {
                    let c = l.dot(&r.v);
                    r.v -= l * c;
                }
                if let Some(u) = normalize(r.v.clone()) {
                    r.v = u;
                }
            }
            let mut v = l0;
            for l in &lines {
                let c = l.dot(&v);
                v -= l * c;
            }
            if let Some(v) = normalize(v) {
                rays.push(Ray {
                    v,
                    zero: Bits::full(k),
                });
            }
            continue;
        }

        let vals: Vec<f64> = rays.iter().map(|r| a.dot(&r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] > DD_TOL).collect();
        if pos.is_empty() {
            for (i, r) in rays.iter_mut().enumerate() {
                if vals[i].abs() <= DD_TOL {
                    r.zero.set(k);
                }
            }
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] < -DD_TOL).collect();
        let eff = d - lines.len();

        let mut new_rays: Vec<Ray> = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common = rays[p].zero.and(&rays[q].zero);
                if eff >= 2 && common.count() + 2 < eff {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(r, ray)| r == p || r == q || !common.is_subset_of(&ray.zero));
                if !adjacent {
                    continue;
                }
                let v = &rays[q].v * vals[p] - &rays[p].v * vals[q];
                if let Some(v) = normalize(v) {
                    let mut zero = common;
                    zero.set(k);
                    new_rays.push(Ray { v, zero });
                }
            }
        }

        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() + new_rays.len());
        for (i, mut r) in rays.into_iter().enumerate() {
            if vals[i] > DD_TOL {
                continue;
            }
            if vals[i] >= -DD_TOL {
                r.zero.set(k);
            }
            kept.push(r);
        }
        for r in new_rays {
            if !kept.iter().any(|o| (&o.v - &r.v).amax() < 1e-9) {
                kept.push(r);
            }
        }
        rays = kept;
    }

    ConeGenerators {
        lines,
        rays: rays.into_iter().map(|r| r.v).collect(),
    }
}
