//! JSON documents read and written by the command line front end.
//!
//! Every top-level document carries `"schema": "invkit/1"`. Polyhedra are
//! `{ "dim", "A", "b" }` with rows `aᵀx ≤ b`; cones are lists of rows
//! `aᵀx ≤ 0`; matrices are row-major nested arrays.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;
use crate::polyhedra::{
    build_partition, facet_cones, quadrants, ConicPartition, HPolyhedron, VPolyhedron,
};
use crate::pwse::{PiecewiseSemiEllipsoid, Violation, ViolationKind};
use crate::synth::{SynthesisOptions, SynthesisProblem, SynthesisResult};
use crate::systems::{
    switched_viability_step, InvarianceReport, SwitchedControlSystem, ViabilityResult,
};

pub const SCHEMA: &str = "invkit/1";

fn schema() -> String {
    SCHEMA.to_string()
}

fn check_schema(s: &str) -> Result<()> {
    if s != SCHEMA {
        return Err(Error::InvalidInput(format!(
            "unsupported schema {s:?}, expected {SCHEMA:?}"
        )));
    }
    Ok(())
}

pub type Matrix = Vec<Vec<f64>>;

pub fn matrix_to_json(m: &DMatrix<f64>) -> Matrix {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Rows of equal length; `n` rows of `[]` give an `n × 0` matrix.
pub fn matrix_from_json(rows: &Matrix) -> Result<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput(
            "matrix rows have different lengths".into(),
        ));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn symmetric_from_json(rows: &Matrix) -> Result<SymmetricMatrix> {
    SymmetricMatrix::from_rows(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HRepJson {
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: Matrix,
    pub b: Vec<f64>,
}

impl From<&HPolyhedron> for HRepJson {
    fn from(p: &HPolyhedron) -> Self {
        Self {
            dim: p.ambient_dim(),
            a: p.rows()
                .iter()
                .map(|(a, _)| a.iter().copied().collect())
                .collect(),
            b: p.rows().iter().map(|(_, b)| *b).collect(),
        }
    }
}

impl HRepJson {
    pub fn to_polyhedron(&self) -> Result<HPolyhedron> {
        if self.a.len() != self.b.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows in A but {} offsets in b",
                self.a.len(),
                self.b.len()
            )));
        }
        let mut rows = Vec::with_capacity(self.a.len());
        for (a, b) in self.a.iter().zip(&self.b) {
            if a.len() != self.dim {
                return Err(Error::DimensionMismatch(format!(
                    "row of length {} in dimension {}",
                    a.len(),
                    self.dim
                )));
            }
            rows.push((DVector::from_column_slice(a), *b));
        }
        HPolyhedron::new(self.dim, rows)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VRepJson {
    pub dim: usize,
    pub vertices: Matrix,
    #[serde(default)]
    pub rays: Matrix,
}

impl From<&VPolyhedron> for VRepJson {
    fn from(v: &VPolyhedron) -> Self {
        let rows = |vs: &[DVector<f64>]| vs.iter().map(|x| x.iter().copied().collect()).collect();
        Self {
            dim: v.n,
            vertices: rows(&v.vertices),
            rays: rows(&v.rays),
        }
    }
}

fn cone_to_json(p: &HPolyhedron) -> Matrix {
    p.rows()
        .iter()
        .map(|(a, _)| a.iter().copied().collect())
        .collect()
}

fn cone_from_json(dim: usize, rows: &Matrix) -> Result<HPolyhedron> {
    let mut normals = Vec::with_capacity(rows.len());
    for r in rows {
        if r.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "cone row of length {} in dimension {dim}",
                r.len()
            )));
        }
        normals.push(DVector::from_column_slice(r));
    }
    HPolyhedron::cone(dim, normals)
}

/// A piecewise semi-ellipsoid: one cone (rows `aᵀx ≤ 0`) and one matrix per piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PwseJson {
    #[serde(default = "schema")]
    pub schema: String,
    pub dim: usize,
    pub partition: Vec<Matrix>,
    #[serde(rename = "Q")]
    pub q: Vec<Matrix>,
}

impl From<&PiecewiseSemiEllipsoid> for PwseJson {
    fn from(s: &PiecewiseSemiEllipsoid) -> Self {
        Self {
            schema: schema(),
            dim: s.dim(),
            partition: s.partition().pieces().iter().map(cone_to_json).collect(),
            q: s.matrices().iter().map(SymmetricMatrix::to_rows).collect(),
        }
    }
}

impl PwseJson {
    pub fn to_pwse(&self) -> Result<PiecewiseSemiEllipsoid> {
        check_schema(&self.schema)?;
        if self.partition.len() != self.q.len() {
            return Err(Error::InvalidInput(format!(
                "{} cones but {} matrices",
                self.partition.len(),
                self.q.len()
            )));
        }
        let cones = self
            .partition
            .iter()
            .map(|c| cone_from_json(self.dim, c))
            .collect::<Result<Vec<_>>>()?;
        let q = self
            .q
            .iter()
            .map(symmetric_from_json)
            .collect::<Result<Vec<_>>>()?;
        PiecewiseSemiEllipsoid::new(build_partition(cones)?, q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeJson {
    #[serde(rename = "A")]
    pub a: Matrix,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Matrix>,
}

/// `{ "A", "B", "X" }` for one mode or `{ "modes": [...], "X" }` for a switched system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemJson {
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Matrix>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Matrix>,
    #[serde(rename = "X")]
    pub x: HRepJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<ModeJson>>,
}

impl SystemJson {
    pub fn to_system(&self) -> Result<SwitchedControlSystem> {
        let x = self.x.to_polyhedron()?;
        let n = self.x.dim;
        let mode = |a: &Matrix, b: &Option<Matrix>| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
            let a = matrix_from_json(a)?;
            let b = match b {
                Some(b) if !b.is_empty() => matrix_from_json(b)?,
                _ => DMatrix::zeros(n, 0),
            };
            Ok((a, b))
        };
        let modes = match (&self.a, &self.modes) {
            (Some(a), None) => vec![mode(a, &self.b)?],
            (None, Some(ms)) => ms.iter().map(|m| mode(&m.a, &m.b)).collect::<Result<_>>()?,
            _ => {
                return Err(Error::InvalidInput(
                    "a system needs exactly one of \"A\" or \"modes\"".into(),
                ))
            }
        };
        SwitchedControlSystem::new(modes, x)
    }

    pub fn from_system(sys: &SwitchedControlSystem) -> Self {
        let x = HRepJson::from(&sys.x);
        let m = |(a, b): &(DMatrix<f64>, DMatrix<f64>)| ModeJson {
            a: matrix_to_json(a),
            b: Some(matrix_to_json(b)),
        };
        if sys.modes.len() == 1 {
            let only = m(&sys.modes[0]);
            Self {
                a: Some(only.a),
                b: only.b,
                x,
                modes: None,
            }
        } else {
            Self {
                a: None,
                b: None,
                x,
                modes: Some(sys.modes.iter().map(m).collect()),
            }
        }
    }
}

/// Where the synthesis partition comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionSource {
    /// `"quadrants"` (all orthants) or `"single"` (the whole space, an ellipsoid).
    Named(String),
    /// Facet cones of the polar of the `k`-th viability iterate.
    FacetCones {
        facet_cones_of_viability_iterate: usize,
    },
    Cones {
        cones: Vec<Matrix>,
    },
}

impl Default for PartitionSource {
    fn default() -> Self {
        PartitionSource::Named("quadrants".into())
    }
}

impl PartitionSource {
    pub fn resolve(&self, sys: &SwitchedControlSystem) -> Result<ConicPartition> {
        let n = sys.state_dim();
        match self {
            PartitionSource::Named(name) => match name.as_str() {
                "quadrants" | "orthants" => build_partition(quadrants(n)),
                "single" => build_partition(vec![HPolyhedron::universe(n)]),
                other => Err(Error::InvalidInput(format!("unknown partition {other:?}"))),
            },
            PartitionSource::FacetCones {
                facet_cones_of_viability_iterate: k,
            } => {
                let iterate = switched_viability_iterate(sys, *k)?;
                build_partition(facet_cones(&iterate.polar_polytope()?)?)
            }
            PartitionSource::Cones { cones } => build_partition(
                cones
                    .iter()
                    .map(|c| cone_from_json(n, c))
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

/// The `k`-th iterate of the viability map started from `X`.
pub fn switched_viability_iterate(sys: &SwitchedControlSystem, k: usize) -> Result<HPolyhedron> {
    let mut p = sys.x.remove_redundancy()?;
    for _ in 0..k {
        p = switched_viability_step(sys, &p)?;
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptionsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_feas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TolerancesJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viability_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema: String,
    pub system: SystemJson,
    #[serde(default)]
    pub partition: PartitionSource,
    /// Defaults to the state constraint set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_polytope: Option<HRepJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptionsJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesJson>,
    /// A set to verify with the `check` command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<PwseJson>,
}

impl ProblemFile {
    pub fn parse(s: &str) -> Result<Self> {
        let p: ProblemFile = from_str(s)?;
        check_schema(&p.schema)?;
        Ok(p)
    }

    pub fn synthesis_problem(&self) -> Result<SynthesisProblem> {
        let sys = self.system.to_system()?;
        let part = self.partition.resolve(&sys)?;
        let prob = SynthesisProblem::new(sys, part)?;
        match &self.objective_polytope {
            Some(p) => prob.with_objective_polytope(p.to_polyhedron()?),
            None => Ok(prob),
        }
    }

    pub fn synthesis_options(&self) -> SynthesisOptions {
        let mut o = SynthesisOptions::default();
        if let Some(t) = &self.tolerances {
            if let Some(s) = t.check_samples {
                o.check_samples = s;
            }
            if let Some(d) = t.degeneracy_tol {
                o.degeneracy_tol = d;
            }
        }
        o
    }
}

pub fn from_str<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("bad JSON: {e}")))
}

pub fn to_string<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable document")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub containment_residual: f64,
    pub samples: usize,
    pub passed: bool,
}

impl From<&InvarianceReport> for ReportJson {
    fn from(r: &InvarianceReport) -> Self {
        Self {
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            containment_residual: r.containment_residual,
            samples: r.samples,
            passed: r.passed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationJson {
    pub kind: String,
    pub i: usize,
    pub j: usize,
    pub residual: f64,
}

impl From<&Violation> for ViolationJson {
    fn from(v: &Violation) -> Self {
        let kind = match v.kind {
            ViolationKind::NotPsd => "not_psd",
            ViolationKind::Continuity => "continuity",
            ViolationKind::Convexity => "convexity",
        };
        Self {
            kind: kind.into(),
            i: v.i,
            j: v.j,
            residual: v.residual,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViabilityJson {
    pub schema: String,
    pub kind: String,
    pub converged: bool,
    pub iterates: Vec<HRepJson>,
    pub facet_counts: Vec<usize>,
    pub kernel: HRepJson,
}

impl From<&ViabilityResult> for ViabilityJson {
    fn from(r: &ViabilityResult) -> Self {
        Self {
            schema: schema(),
            kind: "viability".into(),
            converged: r.converged,
            iterates: r.iterates.iter().map(HRepJson::from).collect(),
            facet_counts: r.iterates.iter().map(HPolyhedron::num_rows).collect(),
            kernel: HRepJson::from(&r.kernel),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisJson {
    pub schema: String,
    pub kind: String,
    pub objective: f64,
    /// The invariant set.
    pub set: PwseJson,
    /// Its polar, whose matrices are the program's decision variables.
    pub polar_side: PwseJson,
    pub report: ReportJson,
    pub violations: Vec<ViolationJson>,
    pub safe_set: HRepJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<HRepJson>,
    pub solver_iterations: usize,
}

impl SynthesisJson {
    pub fn new(r: &SynthesisResult, safe_set: &HPolyhedron, kernel: Option<&HPolyhedron>) -> Self {
        Self {
            schema: schema(),
            kind: "synthesis".into(),
            objective: r.objective,
            set: PwseJson::from(&r.set),
            polar_side: PwseJson::from(&r.polar_side),
            report: ReportJson::from(&r.report),
            violations: r.violations.iter().map(ViolationJson::from).collect(),
            safe_set: HRepJson::from(safe_set),
            kernel: kernel.map(HRepJson::from),
            solver_iterations: r.stats.iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckJson {
    pub schema: String,
    pub kind: String,
    pub report: ReportJson,
    pub violations: Vec<ViolationJson>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn pwse_round_trip() {
        let s = fixtures::five_piece_set();
        let j = PwseJson::from(&s);
        let text = to_string(&j);
        let back: PwseJson = from_str(&text).unwrap();
        assert_eq!(back, j);
        let s2 = back.to_pwse().unwrap();
        for (a, b) in s.matrices().iter().zip(s2.matrices()) {
            assert!(a.max_abs_diff(b) <= 1e-12);
        }
    }

    #[test]
    fn problem_file_defaults() {
        let text = r#"{
            "schema": "invkit/1",
            "system": { "A": [[1,1],[0,1]], "B": [[0],[1]],
                        "X": { "dim": 2, "A": [[1,0],[-1,0],[0,1],[0,-1]], "b": [1,1,1,1] } }
        }"#;
        let p = ProblemFile::parse(text).unwrap();
        assert_eq!(p.partition, PartitionSource::Named("quadrants".into()));
        let prob = p.synthesis_problem().unwrap();
        assert_eq!(prob.partition.len(), 4);
        assert_eq!(prob.objective_polytope, prob.system.x);
    }

    #[test]
    fn partition_sources() {
        let sys = SwitchedControlSystem::from(fixtures::double_integrator());
        let k0: PartitionSource = from_str(r#"{"facet_cones_of_viability_iterate": 0}"#).unwrap();
        assert_eq!(k0.resolve(&sys).unwrap().len(), 4);
        let k1: PartitionSource = from_str(r#"{"facet_cones_of_viability_iterate": 1}"#).unwrap();
        assert_eq!(k1.resolve(&sys).unwrap().len(), 6);
        let single: PartitionSource = from_str(r#""single""#).unwrap();
        assert_eq!(single.resolve(&sys).unwrap().len(), 1);
        let explicit: PartitionSource = from_str(r#"{"cones": [[[-1,0]], [[1,0]]]}"#).unwrap();
        assert_eq!(explicit.resolve(&sys).unwrap().len(), 2);
    }

    #[test]
    fn systems_round_trip() {
        let sys = SwitchedControlSystem::from(fixtures::double_integrator());
        let j = SystemJson::from_system(&sys);
        let back: SystemJson = from_str(&to_string(&j)).unwrap();
        assert_eq!(back.to_system().unwrap(), sys);

        let auto = r#"{ "modes": [ {"A": [[0.5,0],[0,0.5]]}, {"A": [[2,0],[0,2]], "B": []} ],
                        "X": { "dim": 2, "A": [[1,0],[-1,0],[0,1],[0,-1]], "b": [1,1,1,1] } }"#;
        let s: SystemJson = from_str(auto).unwrap();
        let sys = s.to_system().unwrap();
        assert_eq!(sys.modes.len(), 2);
        assert_eq!(sys.modes[1].1.ncols(), 0);
    }

    #[test]
    fn rejects_other_schemas() {
        let text = r#"{ "schema": "other/2", "system": { "A": [[1]], "X": { "dim": 1, "A": [[1],[-1]], "b": [1,1] } } }"#;
        assert!(matches!(
            ProblemFile::parse(text),
            Err(Error::InvalidInput(_))
        ));
    }
}
