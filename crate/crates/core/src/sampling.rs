//! Deterministic random directions for the sampling-based checks.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sample by Box-Muller.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| gaussian(rng)))
}

/// Uniform direction on the unit sphere.
pub fn direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let norm = v.norm();
        if norm > 1e-9 {
            return v / norm;
        }
    }
}

/// `count` directions; in the plane these are evenly spaced angles.
pub fn directions(n: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    if n == 2 {
        return (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
                DVector::from_column_slice(&[t.cos(), t.sin()])
            })
            .collect();
    }
    let mut r = rng(seed);
    (0..count).map(|_| direction(&mut r, n)).collect()
}
