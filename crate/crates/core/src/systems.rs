//! Discrete-time system models, reduction to implicit form, the polyhedral
//! viability iteration and sampling-based invariance checks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{is_psd, orthogonal_complement, projection_matrix, Subspace, SymmetricMatrix};
use crate::polyhedra::HPolyhedron;
use crate::pwse::{ExtendedReal, PiecewiseSemiEllipsoid};
use crate::sampling;

/// `x⁺ = A x + B u` with state constraint `x ∈ X`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearControlSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub x: HPolyhedron,
}

impl LinearControlSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, x: HPolyhedron) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, expected {n}",
                b.nrows()
            )));
        }
        if x.ambient_dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "X lives in dimension {}, expected {n}",
                x.ambient_dim()
            )));
        }
        check_safe_set(&x)?;
        Ok(Self { a, b, x })
    }

    /// Autonomous system `x⁺ = A x`.
    pub fn autonomous(a: DMatrix<f64>, x: HPolyhedron) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DMatrix::zeros(n, 0), x)
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

fn check_safe_set(x: &HPolyhedron) -> Result<()> {
    if x.rows().iter().any(|(_, b)| *b <= 0.0) {
        return Err(Error::OriginNotContained);
    }
    if !x.is_bounded()? {
        return Err(Error::InvalidInput(
            "the state constraint set must be bounded".into(),
        ));
    }
    Ok(())
}

/// Implicit dynamics `E x⁺ = C x` with `x ∈ X`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicSystem {
    pub e: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub x: HPolyhedron,
}

impl AlgebraicSystem {
    pub fn rows(&self) -> usize {
        self.e.nrows()
    }
}

/// Modes `(A_σ, B_σ)` switched by an uncontrolled signal, sharing `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchedControlSystem {
    pub modes: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    pub x: HPolyhedron,
}

impl SwitchedControlSystem {
    pub fn new(modes: Vec<(DMatrix<f64>, DMatrix<f64>)>, x: HPolyhedron) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidInput(
                "a switched system needs at least one mode".into(),
            ));
        }
        for (a, b) in &modes {
            LinearControlSystem::new(a.clone(), b.clone(), x.clone())?;
        }
        Ok(Self { modes, x })
    }

    pub fn state_dim(&self) -> usize {
        self.x.ambient_dim()
    }

    pub fn mode(&self, k: usize) -> LinearControlSystem {
        let (a, b) = &self.modes[k];
        LinearControlSystem {
            a: a.clone(),
            b: b.clone(),
            x: self.x.clone(),
        }
    }
}

impl From<LinearControlSystem> for SwitchedControlSystem {
    fn from(s: LinearControlSystem) -> Self {
        Self {
            modes: vec![(s.a, s.b)],
            x: s.x,
        }
    }
}

/// Orthonormal rows spanning `Image(B)^⊥`, each with a positive leading entry.
fn input_annihilator(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let image = Subspace::column_space(b, 1e-9);
    if image.dim() == 0 {
        return DMatrix::identity(n, n);
    }
    let mut w = orthogonal_complement(&image).basis_rows();
    for mut row in w.row_iter_mut() {
        if let Some(lead) = row.iter().find(|v| v.abs() > 1e-12).copied() {
            if lead < 0.0 {
                row.neg_mut();
            }
        }
    }
    w
}

/// `E = Wᵀ`, `C = WᵀA` for an orthonormal basis `W` of `Image(B)^⊥`;
/// `r = n − rank(B)` rows.
pub fn reduce_to_algebraic(sys: &LinearControlSystem) -> AlgebraicSystem {
    let e = input_annihilator(&sys.b);
    let c = &e * &sys.a;
    AlgebraicSystem {
        e,
        c,
        x: sys.x.clone(),
    }
}

/// Uncompressed form `E = P`, `C = P A` with `P` the projector onto `Image(B)^⊥`.
pub fn reduce_to_algebraic_projector(sys: &LinearControlSystem) -> AlgebraicSystem {
    let n = sys.state_dim();
    let image = Subspace::column_space(&sys.b, 1e-9);
    let p = if image.dim() == 0 {
        DMatrix::identity(n, n)
    } else {
        projection_matrix(&orthogonal_complement(&image)).to_dmatrix()
    };
    let c = &p * &sys.a;
    AlgebraicSystem {
        e: p,
        c,
        x: sys.x.clone(),
    }
}

/// `Q ⪰ AᵀQA`: the ellipsoid `{xᵀQx ≤ 1}` is invariant for `x⁺ = Ax`.
pub fn is_invariant_autonomous_ellipsoid(a: &DMatrix<f64>, q: &SymmetricMatrix) -> bool {
    let image = q.congruence(&a.transpose());
    is_psd(&q.sub(&image), 1e-9)
}

/// `{x ∈ X : ∃u, Ax + Bu ∈ P}`.
pub fn viability_step(sys: &LinearControlSystem, p: &HPolyhedron) -> Result<HPolyhedron> {
    let n = sys.state_dim();
    let m = sys.input_dim();
    let mut ab = DMatrix::zeros(n, n + m);
    ab.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    ab.view_mut((0, n), (n, m)).copy_from(&sys.b);
    let pre = p.preimage(&ab)?;
    let mut rows = pre.rows().to_vec();
    for (a, b) in sys.x.rows() {
        let mut lifted = DVector::zeros(n + m);
        lifted.rows_mut(0, n).copy_from(a);
        rows.push((lifted, *b));
    }
    let mut set = HPolyhedron::new(n + m, rows)?;
    if m == 0 {
        return set.remove_redundancy();
    }
    for _ in 0..m {
        set = set.eliminate_last()?;
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViabilityResult {
    pub kernel: HPolyhedron,
    pub converged: bool,
    /// `X` followed by every distinct iterate.
    pub iterates: Vec<HPolyhedron>,
}

/// Iterates [`viability_step`] from `X` until the iterate stops shrinking
/// (mutual containment at `tol`) or `max_iter` steps were taken.
pub fn viability_kernel(
    sys: &LinearControlSystem,
    max_iter: usize,
    tol: f64,
) -> Result<ViabilityResult> {
    iterate_to_fixed_point(&sys.x, max_iter, tol, |p| viability_step(sys, p))
}

/// `{x ∈ X : ∀σ ∃u, A_σx + B_σu ∈ P}`: the switching signal is adversarial.
pub fn switched_viability_step(
    sys: &SwitchedControlSystem,
    p: &HPolyhedron,
) -> Result<HPolyhedron> {
    let mut rows = Vec::new();
    for k in 0..sys.modes.len() {
        rows.extend(viability_step(&sys.mode(k), p)?.rows().iter().cloned());
    }
    HPolyhedron::new(sys.state_dim(), rows)?.remove_redundancy()
}

pub fn switched_viability_kernel(
    sys: &SwitchedControlSystem,
    max_iter: usize,
    tol: f64,
) -> Result<ViabilityResult> {
    if sys.modes.len() == 1 {
        return viability_kernel(&sys.mode(0), max_iter, tol);
    }
    iterate_to_fixed_point(&sys.x, max_iter, tol, |p| switched_viability_step(sys, p))
}

fn iterate_to_fixed_point(
    x: &HPolyhedron,
    max_iter: usize,
    tol: f64,
    step: impl Fn(&HPolyhedron) -> Result<HPolyhedron>,
) -> Result<ViabilityResult> {
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    let mut iterates = vec![x.remove_redundancy()?];
    for _ in 0..max_iter {
        let current = iterates.last().expect("nonempty history");
        let next = step(current)?;
        if current.is_subset_of(&next, tol)? {
            return Ok(ViabilityResult {
                kernel: current.clone(),
                converged: true,
                iterates,
            });
        }
        iterates.push(next);
    }
    Ok(ViabilityResult {
        kernel: iterates.last().expect("nonempty history").clone(),
        converged: false,
        iterates,
    })
}

/// Worst residuals of the two invariance tests and of the containment in `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    /// `max_x min_u gauge(S, Ax + Bu) − 1` over sampled boundary points.
    pub primal_residual: f64,
    /// `max_y support(S, Cᵀy) − support(S, Eᵀy)` over sampled unit `y`.
    pub dual_residual: f64,
    /// `max_k support(S, a_k) − b_k` over the rows of `X`.
    pub containment_residual: f64,
    pub samples: usize,
}

impl InvarianceReport {
    pub const TOL: f64 = 1e-6;

    pub fn primal_ok(&self) -> bool {
        self.primal_residual <= Self::TOL
    }

    pub fn dual_ok(&self) -> bool {
        self.dual_residual <= Self::TOL
    }

    pub fn contained(&self) -> bool {
        self.containment_residual <= Self::TOL
    }

    pub fn passed(&self) -> bool {
        self.primal_ok() && self.dual_ok() && self.contained()
    }

    fn merge(self, other: InvarianceReport) -> InvarianceReport {
        InvarianceReport {
            primal_residual: self.primal_residual.max(other.primal_residual),
            dual_residual: self.dual_residual.max(other.dual_residual),
            containment_residual: self.containment_residual.max(other.containment_residual),
            samples: self.samples.max(other.samples),
        }
    }
}

fn excess(v: ExtendedReal, bound: f64) -> f64 {
    match v {
        ExtendedReal::Finite(x) => x - bound,
        ExtendedReal::Infinity => f64::INFINITY,
    }
}

/// Primal and dual invariance tests of `S` for `sys`.
pub fn check_control_invariance(
    sys: &LinearControlSystem,
    s: &PiecewiseSemiEllipsoid,
    n_samples: usize,
) -> Result<InvarianceReport> {
    let n = sys.state_dim();
    if s.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "set in dimension {}, system in dimension {n}",
            s.dim()
        )));
    }
    let mut containment: f64 = f64::NEG_INFINITY;
    for (a, b) in sys.x.rows() {
        containment = containment.max(excess(s.support(a)?, *b));
    }

    let image = Subspace::column_space(&sys.b, 1e-9);
    let wb = image.basis().to_vec();
    let dirs = sampling::directions(n, n_samples, 0xC0FFEE);

    let mut primal: f64 = f64::NEG_INFINITY;
    for d in &dirs {
        let Some(x) = s.boundary_point(d)? else {
            // Unbounded direction of S; containment in X already fails.
            continue;
        };
        let ax = &sys.a * &x;
        let best = min_gauge_over_inputs(s, &ax, &wb)?;
        primal = primal.max(excess(best, 1.0));
    }

    let alg = reduce_to_algebraic(sys);
    let r = alg.rows();
    let mut dual: f64 = f64::NEG_INFINITY;
    if r > 0 {
        for y in sampling::directions(r, n_samples, 0xD0A1) {
            let lhs = s.support(&(alg.c.transpose() * &y))?;
            let rhs = s.support(&(alg.e.transpose() * &y))?;
            let res = match (lhs, rhs) {
                (_, ExtendedReal::Infinity) => 0.0,
                (l, ExtendedReal::Finite(rv)) => excess(l, rv),
            };
            dual = dual.max(res);
        }
    }
    Ok(InvarianceReport {
        primal_residual: if primal == f64::NEG_INFINITY {
            0.0
        } else {
            primal
        },
        dual_residual: if r > 0 { dual } else { 0.0 },
        containment_residual: containment,
        samples: n_samples,
    })
}

/// [`check_control_invariance`] for every mode; worst residuals are reported.
pub fn check_switched_invariance(
    sys: &SwitchedControlSystem,
    s: &PiecewiseSemiEllipsoid,
    n_samples: usize,
) -> Result<InvarianceReport> {
    let mut report: Option<InvarianceReport> = None;
    for k in 0..sys.modes.len() {
        let r = check_control_invariance(&sys.mode(k), s, n_samples)?;
        report = Some(match report {
            None => r,
            Some(prev) => prev.merge(r),
        });
    }
    Ok(report.expect("at least one mode"))
}

/// `min_v gauge(S, z + W v)` over the input image spanned by the orthonormal `w`.
fn min_gauge_over_inputs(
    s: &PiecewiseSemiEllipsoid,
    z: &DVector<f64>,
    w: &[DVector<f64>],
) -> Result<ExtendedReal> {
    if w.is_empty() {
        return s.gauge(z);
    }
    let eval = |v: &DVector<f64>| -> Result<f64> {
        let mut p = z.clone();
        for (k, wk) in w.iter().enumerate() {
            p += wk * v[k];
        }
        Ok(s.gauge(&p)?.value())
    };

    // Outside the radius R the gauge exceeds its value at v = 0.
    let mut c = f64::INFINITY;
    let probes: Vec<DVector<f64>> = if w.len() == 1 {
        vec![w[0].clone(), -&w[0]]
    } else {
        let mut rng = sampling::rng(7);
        (0..64)
            .map(|_| {
                let coef = sampling::direction(&mut rng, w.len());
                w.iter()
                    .enumerate()
                    .fold(DVector::zeros(z.len()), |acc, (k, wk)| acc + wk * coef[k])
            })
            .collect()
    };
    for p in &probes {
        c = c.min(s.gauge(p)?.value());
    }
    if w.len() > 1 {
        c *= 0.5;
    }
    let g0 = s.gauge(z)?.value();
    let gm = s.gauge(&-z)?.value();
    let radius = if c > 1e-12 && g0.is_finite() && gm.is_finite() {
        (g0 + gm) / c + 1.0
    } else {
        1e6
    };

    let k = w.len();
    let mut v = DVector::zeros(k);
    let mut best = eval(&v)?;
    let sweeps = if k == 1 { 1 } else { 30 };
    for _ in 0..sweeps {
        let before = best;
        for i in 0..k {
            let mut lo = v[i] - radius;
            let mut hi = v[i] + radius;
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            let at = |t: f64, v: &DVector<f64>| -> Result<f64> {
                let mut u = v.clone();
                u[i] = t;
                eval(&u)
            };
            let mut x1 = hi - phi * (hi - lo);
            let mut x2 = lo + phi * (hi - lo);
            let mut f1 = at(x1, &v)?;
            let mut f2 = at(x2, &v)?;
            while hi - lo > 1e-9 {
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = at(x1, &v)?;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = at(x2, &v)?;
                }
            }
            let t = 0.5 * (lo + hi);
            let ft = at(t, &v)?;
            if ft < best {
                best = ft;
                v[i] = t;
            }
        }
        if before - best < 1e-12 {
            break;
        }
    }
    Ok(ExtendedReal::from(best))
}
