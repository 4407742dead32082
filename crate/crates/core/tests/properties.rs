mod common;

use common::*;
use invkit::certify::{certify_copositive, verify_copositivity_pointwise};
use invkit::linalg::{
    is_psd, orthogonal_complement, projection_matrix, pseudoinverse, Subspace, DEFAULT_RANK_TOL,
};
use invkit::polyhedra::{build_partition, facet_cones, HPolyhedron};
use invkit::systems::{check_control_invariance, viability_step, LinearControlSystem};
use invkit::{Error, PiecewiseSemiEllipsoid, SymmetricMatrix, VPolyhedron};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn project_first(v: &DVector<f64>, k: usize) -> DVector<f64> {
    v.rows(0, k).into_owned()
}

fn inside(rows: &[(DVector<f64>, f64)], x: &DVector<f64>) -> f64 {
    rows.iter()
        .map(|(a, b)| a.dot(x) - b)
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pseudoinverse_is_an_involution(seed in any::<u64>(), n in 1usize..=5, r in 1usize..=5) {
        let mut rng = rng(seed);
        let r = r.min(n);
        let d: Vec<f64> = (0..n)
            .map(|k| if k < r { 0.1 + 9.9 * rng.random::<f64>() } else { 0.0 })
            .collect();
        let q = with_spectrum(&mut rng, &d);
        let back = pseudoinverse(&pseudoinverse(&q, DEFAULT_RANK_TOL).unwrap(), DEFAULT_RANK_TOL).unwrap();
        prop_assert!(back.max_abs_diff(&q) <= 1e-7 * q.max_abs().max(1.0));
    }

    #[test]
    fn complementary_projections_sum_to_identity(seed in any::<u64>(), n in 1usize..=5, k in 0usize..=5) {
        let mut rng = rng(seed);
        let vs: Vec<DVector<f64>> = (0..k).map(|_| gaussian_vec(&mut rng, n)).collect();
        let s = Subspace::span(n, &vs, 1e-9);
        let sum = projection_matrix(&s).add(&projection_matrix(&orthogonal_complement(&s)));
        prop_assert!(sum.max_abs_diff(&SymmetricMatrix::identity(n)) <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn psd_test_agrees_with_pivoted_cholesky(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = rng(seed);
        let d: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => 0.0,
                1 => -(0.01 + 3.0 * rng.random::<f64>()),
                _ => 0.01 + 3.0 * rng.random::<f64>(),
            })
            .collect();
        let q = with_spectrum(&mut rng, &d);
        let truth = d.iter().all(|x| *x >= 0.0);
        prop_assert_eq!(pivoted_cholesky_psd(&q.to_dmatrix(), 1e-9), truth);
        prop_assert_eq!(is_psd(&q, 1e-9), truth);
    }

    #[test]
    fn preimage_membership(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let mut rng = rng(seed);
        let rows = random_polytope_rows(&mut rng, m, 3, 1.0);
        let p = HPolyhedron::new(m, rows.clone()).unwrap();
        let mm = gaussian_mat(&mut rng, m, n);
        let pre = p.preimage(&mm).unwrap();
        let x = gaussian_vec(&mut rng, n) * 0.7;
        let slack = inside(&rows, &(&mm * &x));
        prop_assume!(slack.abs() > 1e-9);
        prop_assert_eq!(pre.contains(&x, 0.0), slack < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eliminate_last_is_the_shadow(seed in any::<u64>(), extra in 1usize..6) {
        let mut rng = rng(seed);
        let rows = random_polytope_rows(&mut rng, 3, extra, 1.0);
        let p = HPolyhedron::new(3, rows.clone()).unwrap();
        let shadow = p.eliminate_last().unwrap();
        let ours: Vec<DVector<f64>> = brute_vertices(&rows, 3).iter().map(|v| project_first(v, 2)).collect();
        let theirs: Vec<DVector<f64>> = p.to_vrep().unwrap().vertices.iter().map(|v| project_first(v, 2)).collect();
        let shadow_vertices = brute_vertices(shadow.rows(), 2);
        for y in circle(40) {
            let h = support_of_points(&ours, &y);
            prop_assert!((support_of_points(&theirs, &y) - h).abs() <= 1e-8);
            prop_assert!((support_of_points(&shadow_vertices, &y) - h).abs() <= 1e-8);
        }
        // Points of the shadow lift; points outside do not.
        for _ in 0..50 {
            let x = gaussian_vec(&mut rng, 2) * 0.8;
            let lifts = (0..=400).any(|k| {
                let u = -1.0 + k as f64 / 200.0;
                inside(&rows, &DVector::from_column_slice(&[x[0], x[1], u])) <= 1e-12
            });
            let slack = shadow.max_violation(&x);
            if slack < -1e-2 {
                prop_assert!(lifts);
            } else if slack > 1e-9 {
                prop_assert!(!lifts);
            }
        }
    }

    #[test]
    fn polar_polytope_is_an_involution(seed in any::<u64>(), n in 2usize..=3, extra in 0usize..6) {
        let mut rng = rng(seed);
        let r = 0.5 + rng.random::<f64>();
        let rows = random_polytope_rows(&mut rng, n, extra, r);
        let p = HPolyhedron::new(n, rows.clone()).unwrap();
        let back = p.polar_polytope().unwrap().polar_polytope().unwrap();
        let want = brute_vertices(&rows, n);
        let got = brute_vertices(back.rows(), n);
        for _ in 0..40 {
            let y = unit_vec(&mut rng, n);
            prop_assert!((support_of_points(&got, &y) - support_of_points(&want, &y)).abs() <= 1e-8);
        }
    }

    #[test]
    fn facet_cones_form_a_partition(seed in any::<u64>(), n in 2usize..=3, extra in 0usize..6) {
        let mut rng = rng(seed);
        let rows = random_polytope_rows(&mut rng, n, extra, 1.0);
        let p = HPolyhedron::new(n, rows).unwrap();
        let part = build_partition(facet_cones(&p).unwrap()).unwrap();
        prop_assert!(part.is_complete());
        prop_assert_eq!(part.len(), p.facets().unwrap().num_rows());
    }

    #[test]
    fn gauge_shape_properties(seed in any::<u64>(), lines in 1usize..=3) {
        let mut rng = rng(seed);
        let h = HingeGauge::random(&mut rng, lines);
        let s = h.to_pwse();
        prop_assert!(s.validate().is_empty());
        let g = |x: &DVector<f64>| s.gauge(x).unwrap().value();
        for _ in 0..100 {
            let x = gaussian_vec(&mut rng, 2);
            let y = gaussian_vec(&mut rng, 2);
            let t = 10.0 * rng.random::<f64>();
            prop_assert!((g(&(&x * t)) - t * g(&x)).abs() <= 1e-9 * (1.0 + t * g(&x)));
            prop_assert!(g(&((&x + &y) * 0.5)) <= 0.5 * (g(&x) + g(&y)) + 1e-9);
            prop_assert!((g(&x) - h.value(&x)).abs() <= 1e-9 * (1.0 + g(&x)));
        }
        // On a shared boundary ray the pieces agree.
        let part = s.partition();
        let mut shared = 0;
        for i in 0..part.len() {
            for r in part.rays(i) {
                let owners = part.containing(r, 1e-10);
                if owners.len() < 2 {
                    continue;
                }
                shared += 1;
                let vals: Vec<f64> = owners.iter().map(|&j| s.matrix(j).quad_form(r).sqrt()).collect();
                for v in &vals {
                    prop_assert!((v - vals[0]).abs() < 1e-7);
                }
            }
        }
        prop_assert!(shared >= 2 * lines);
    }

    #[test]
    fn gauge_is_a_local_max_at_kinks(seed in any::<u64>(), extra in 0usize..5) {
        let mut rng = rng(seed);
        let rows = random_polytope_rows(&mut rng, 2, extra, 1.0);
        let polytope = PiecewiseSemiEllipsoid::from_polytope(&HPolyhedron::new(2, rows.clone()).unwrap()).unwrap();
        for s in [polytope, invkit::fixtures::five_piece_set()] {
            let part = s.partition();
            for i in 0..part.len() {
                for r in part.rays(i) {
                    let owners = part.containing(r, 1e-10);
                    if owners.len() < 2 {
                        continue;
                    }
                    // Where the forms are tangent along the ray the max form does
                    // not hold; the square and the disk meet like that at (0, 1).
                    let kink = owners.iter().all(|&j| {
                        owners.iter().all(|&k| {
                            j == k || (s.matrix(j).mul_vec(r) - s.matrix(k).mul_vec(r)).norm() > 1e-6
                        })
                    });
                    if !kink {
                        continue;
                    }
                    for _ in 0..10 {
                        let x = r + gaussian_vec(&mut rng, 2) * 1e-3;
                        let local = owners
                            .iter()
                            .map(|&j| s.matrix(j).quad_form(&x).max(0.0).sqrt())
                            .fold(0.0, f64::max);
                        let g = s.gauge(&x).unwrap().value();
                        prop_assert!((g - local).abs() <= 1e-9 * (1.0 + g));
                    }
                }
            }
        }
        // The polytope gauge is also the max of its facet functionals.
        let p = HPolyhedron::new(2, rows.clone()).unwrap();
        let s = PiecewiseSemiEllipsoid::from_polytope(&p).unwrap();
        for _ in 0..50 {
            let x = gaussian_vec(&mut rng, 2);
            let want = rows.iter().map(|(a, b)| a.dot(&x) / b).fold(0.0, f64::max);
            prop_assert!((s.gauge(&x).unwrap().value() - want).abs() <= 1e-9 * (1.0 + want));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gauge_is_the_support_of_the_polar_by_sampling(seed in any::<u64>(), lines in 1usize..=3) {
        let mut rng = rng(seed);
        let s = HingeGauge::random(&mut rng, lines).to_pwse();
        let polar = s.polar().unwrap();
        let boundary: Vec<DVector<f64>> = circle(20_000)
            .iter()
            .map(|d| polar.boundary_point(d).unwrap().unwrap())
            .collect();
        for _ in 0..20 {
            let x = unit_vec(&mut rng, 2);
            let sampled = support_of_points(&boundary, &x);
            let g = s.gauge(&x).unwrap().value();
            prop_assert!(sampled <= g + 1e-9);
            prop_assert!(g - sampled <= 1e-4);
        }
    }
}

// Four equivalent invariance inequalities for `x⁺ = Ax`, worst violation.
fn worst_invariance_gap(
    s: &PiecewiseSemiEllipsoid,
    a: &DMatrix<f64>,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> f64 {
    let polar = s.polar().unwrap();
    let at = a.transpose();
    let g = |set: &PiecewiseSemiEllipsoid, x: &DVector<f64>| set.gauge(x).unwrap().value();
    let h = |set: &PiecewiseSemiEllipsoid, x: &DVector<f64>| set.support(x).unwrap().value();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..count {
        let d = unit_vec(rng, a.nrows());
        let (ad, atd) = (a * &d, &at * &d);
        worst = worst
            .max(h(s, &atd) - h(s, &d))
            .max(g(s, &ad) - g(s, &d))
            .max(g(&polar, &atd) - g(&polar, &d))
            .max(h(&polar, &ad) - h(&polar, &d));
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn invariance_conditions_agree_on_piecewise_sets(seed in any::<u64>(), lines in 1usize..=3) {
        let mut rng = rng(seed);
        let h = HingeGauge::random(&mut rng, lines);
        let s = h.to_pwse();
        let (lo, hi) = h.bounds();
        // ‖A‖ ≤ 0.9 lo/hi maps the set strictly inside itself.
        let a = random_orthogonal(&mut rng, 2) * (0.9 * lo / hi);
        prop_assert!(worst_invariance_gap(&s, &a, &mut rng, 500) <= 1e-8);
        let big = HPolyhedron::hypercube(2, 1e3);
        let primal = LinearControlSystem::autonomous(a.clone(), big.clone()).unwrap();
        let dual = LinearControlSystem::autonomous(a.transpose(), big.clone()).unwrap();
        let polar = s.polar().unwrap();
        prop_assert!(check_control_invariance(&primal, &s, 300).unwrap().primal_residual <= 1e-8);
        prop_assert!(check_control_invariance(&dual, &polar, 300).unwrap().primal_residual <= 1e-8);

        // Expansion breaks all four, and the polar system with it.
        let grow = DMatrix::identity(2, 2) * 1.5;
        prop_assert!(worst_invariance_gap(&s, &grow, &mut rng, 50) > 1e-3);
        let dual = LinearControlSystem::autonomous(grow.transpose(), big).unwrap();
        prop_assert!(check_control_invariance(&dual, &polar, 300).unwrap().primal_residual > 1e-3);
    }

    #[test]
    fn image_inclusion_matches_preimage_inclusion(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=3) {
        let mut rng = rng(seed);
        let a = gaussian_mat(&mut rng, m, n);
        let scale = 0.1 + 1.4 * rng.random::<f64>();
        let pts: Vec<DVector<f64>> = (0..n + 2).map(|_| gaussian_vec(&mut rng, n) * scale).collect();
        let t_rows = random_polytope_rows(&mut rng, m, 2, 1.0);
        let t = HPolyhedron::new(m, t_rows.clone()).unwrap();
        let margin = pts.iter().map(|p| inside(&t_rows, &(&a * p))).fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(margin.abs() > 1e-6);
        let image_inside = margin < 0.0;
        let s = VPolyhedron::new(n, pts.clone(), vec![]).unwrap().to_hrep();
        let pre = t.preimage(&a).unwrap();
        match s {
            Ok(s) => prop_assert_eq!(s.is_subset_of(&pre, 1e-9).unwrap(), image_inside),
            // A flat point set has no H-representation in this dimension; use the points.
            Err(_) => {}
        }
        for _ in 0..50 {
            let w: Vec<f64> = (0..pts.len()).map(|_| rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            let x = pts.iter().zip(&w).fold(DVector::zeros(n), |acc, (p, wi)| acc + p * (*wi / total));
            prop_assert_eq!(pre.contains(&x, 1e-9), t.contains(&(&a * &x), 1e-9));
            if image_inside {
                prop_assert!(pre.contains(&x, 1e-9));
            }
        }
    }

    #[test]
    fn viability_step_is_monotone(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let a = gaussian_mat(&mut rng, 2, 2);
        let b = gaussian_mat(&mut rng, 2, 1);
        let sys = LinearControlSystem::new(a, b, HPolyhedron::hypercube(2, 1.5)).unwrap();
        let outer_rows = random_polytope_rows(&mut rng, 2, 3, 1.0);
        let outer = HPolyhedron::new(2, outer_rows.clone()).unwrap();
        let mut inner_rows = outer.scaled(0.5 + 0.5 * rng.random::<f64>()).rows().to_vec();
        inner_rows.push((unit_vec(&mut rng, 2), 0.2 + rng.random::<f64>()));
        let inner = HPolyhedron::new(2, inner_rows).unwrap();
        let step = |p: &HPolyhedron| match viability_step(&sys, p) {
            Ok(q) => Some(q),
            Err(Error::EmptyPolyhedron) => None,
            Err(e) => panic!("{e}"),
        };
        let (small, big) = (step(&inner), step(&outer));
        if let Some(small) = small {
            let big = big.expect("a superset has a nonempty step");
            for _ in 0..2000 {
                let x = DVector::from_fn(2, |_, _| 3.0 * rng.random::<f64>() - 1.5);
                if small.contains(&x, 0.0) {
                    prop_assert!(big.contains(&x, 1e-9));
                }
            }
        }
    }

    #[test]
    fn certified_matrices_are_copositive(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = rng(seed);
        let rays: Vec<DVector<f64>> = (0..n + rng.random_range(0..2))
            .map(|_| {
                let mut v = gaussian_vec(&mut rng, n);
                v[n - 1] = v[n - 1].abs() + 1.0;
                &v / v.norm()
            })
            .collect();
        let cone = VPolyhedron::cone(n, rays.clone()).unwrap().to_hrep().unwrap();
        let m = gaussian_mat(&mut rng, n, n);
        let q = sym_from(&m);
        // Soundness only concerns certificates that were found.
        let found = match certify_copositive(&q, &cone, 1e-9) {
            Ok(c) => c,
            Err(Error::NumericalFailure(_)) => None,
            Err(e) => panic!("{e}"),
        };
        if let Some(cert) = found {
            prop_assert!(cert.lambda.iter().all(|(_, l)| *l >= -1e-9));
            prop_assert!(verify_copositivity_pointwise(&q, &cone, 10_000).unwrap() >= -1e-7);
            for _ in 0..2000 {
                let x = rays.iter().fold(DVector::zeros(n), |acc, r| acc + r * rng.random::<f64>());
                let norm = x.norm();
                if norm > 1e-9 {
                    prop_assert!(q.quad_form(&(x / norm)) >= -1e-7);
                }
            }
        }
    }
}

#[test]
fn preimage_of_an_image_can_be_larger() {
    let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let s = HPolyhedron::hypercube(1, 1.0);
    let t = HPolyhedron::hypercube(2, 1.0);
    // A T = S: the image of the square's corners spans [-1, 1].
    let corners = brute_vertices(t.rows(), 2);
    let image: Vec<f64> = corners.iter().map(|c| (&a * c)[0]).collect();
    let lo = image.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = image.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!((lo, hi), (-1.0, 1.0));
    let pre = s.preimage(&a).unwrap();
    assert!(!pre.is_subset_of(&t, 1e-9).unwrap());
    assert!(pre.contains(&v2(0.0, 5.0), 0.0));
    assert!(!t.contains(&v2(0.0, 5.0), 0.0));
}

#[test]
fn max_form_fails_at_a_tangent_joint() {
    // Right of (0, 1) the square top |x₂| is the gauge, below the disk's value.
    let s = invkit::fixtures::five_piece_set();
    let x = v2(1e-3, 1.0);
    let g = s.gauge(&x).unwrap().value();
    assert!((g - 1.0).abs() < 1e-12);
    assert!(x.norm() > g + 1e-7);
}
