//! Small reference instances shared by tests, benchmarks and the CLI examples.

use nalgebra::{DMatrix, DVector};

use crate::linalg::SymmetricMatrix;
use crate::polyhedra::{build_partition, HPolyhedron};
use crate::pwse::{sym, PiecewiseSemiEllipsoid};
use crate::systems::LinearControlSystem;

fn cone(rows: &[[f64; 2]]) -> HPolyhedron {
    HPolyhedron::cone(
        2,
        rows.iter().map(|r| DVector::from_column_slice(r)).collect(),
    )
    .expect("fixture cone")
}

/// Five-piece planar set with gauge
/// `|x₁|` on `0 ≤ x₂ ≤ x₁`, `|x₂|` on `0 ≤ x₁ ≤ x₂`, `‖x‖₂` on `x₁ ≤ 0 ≤ x₂`,
/// `|x₁ + x₂|` on `x₁, x₂ ≤ 0` and `√(x₁² − x₁x₂ + x₂²)` on `x₂ ≤ 0 ≤ x₁`.
pub fn five_piece_set() -> PiecewiseSemiEllipsoid {
    let pieces = vec![
        cone(&[[0.0, -1.0], [-1.0, 1.0]]),
        cone(&[[-1.0, 0.0], [1.0, -1.0]]),
        cone(&[[1.0, 0.0], [0.0, -1.0]]),
        cone(&[[1.0, 0.0], [0.0, 1.0]]),
        cone(&[[0.0, 1.0], [-1.0, 0.0]]),
    ];
    let q = vec![
        sym(&[&[1.0, 0.0], &[0.0, 0.0]]),
        sym(&[&[0.0, 0.0], &[0.0, 1.0]]),
        SymmetricMatrix::identity(2),
        sym(&[&[1.0, 1.0], &[1.0, 1.0]]),
        sym(&[&[1.0, -0.5], &[-0.5, 1.0]]),
    ];
    PiecewiseSemiEllipsoid::new(build_partition(pieces).expect("fixture partition"), q)
        .expect("fixture set")
}

/// Hand-derived polar of [`five_piece_set`]: cones as `aᵀx ≤ 0` rows with matrices.
pub fn five_piece_polar() -> Vec<(Vec<[f64; 2]>, SymmetricMatrix)> {
    let c = 4.0 / 3.0;
    vec![
        (
            vec![[-1.0, 0.0], [0.0, -1.0]],
            sym(&[&[1.0, 1.0], &[1.0, 1.0]]),
        ),
        (vec![[1.0, 0.0], [0.0, -1.0]], SymmetricMatrix::identity(2)),
        (
            vec![[1.0, -1.0], [0.0, 1.0]],
            sym(&[&[1.0, 0.0], &[0.0, 0.0]]),
        ),
        (
            vec![[-1.0, 1.0], [2.0, 1.0]],
            sym(&[&[0.0, 0.0], &[0.0, 1.0]]),
        ),
        (
            vec![[-2.0, -1.0], [1.0, 2.0]],
            sym(&[&[c, c / 2.0], &[c / 2.0, c]]),
        ),
        (
            vec![[-1.0, -2.0], [0.0, 1.0]],
            sym(&[&[1.0, 0.0], &[0.0, 0.0]]),
        ),
    ]
}

/// `x⁺ = [[1,1],[0,1]] x + [0;1] u` on the box `[−1,1]²`.
pub fn double_integrator() -> LinearControlSystem {
    LinearControlSystem::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        HPolyhedron::hypercube(2, 1.0),
    )
    .expect("fixture system")
}

/// Hexagon `{|x₁| ≤ 1, |x₂| ≤ 1, |x₁+x₂| ≤ 1}`, the maximal control invariant
/// subset of the box for [`double_integrator`].
pub fn double_integrator_kernel() -> HPolyhedron {
    let rows = [
        ([1.0, 0.0], 1.0),
        ([-1.0, 0.0], 1.0),
        ([0.0, 1.0], 1.0),
        ([0.0, -1.0], 1.0),
        ([1.0, 1.0], 1.0),
        ([-1.0, -1.0], 1.0),
    ];
    HPolyhedron::new(
        2,
        rows.iter()
            .map(|(a, b)| (DVector::from_column_slice(a), *b))
            .collect(),
    )
    .expect("fixture kernel")
}

/// Counterclockwise rotation by `theta`.
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}
