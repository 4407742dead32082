//! Piecewise semi-ellipsoidal control invariant sets for discrete-time
//! linear systems: polyhedral tools, conic partitions, polar duality,
//! copositivity certificates and the semidefinite synthesis program.

pub mod certify;
pub mod conic;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod polyhedra;
pub mod pwse;
pub mod sampling;
pub mod synth;
pub mod systems;

pub use conic::{ConicProgram, ConicSolver, InteriorPointSolver, Solution, SolveStatus};
pub use error::{Error, Result};
pub use linalg::SymmetricMatrix;
pub use polyhedra::{ConicPartition, HPolyhedron, VPolyhedron};
pub use pwse::{ExtendedReal, PiecewiseSemiEllipsoid};
pub use synth::{SynthesisProblem, SynthesisResult};
pub use systems::{AlgebraicSystem, InvarianceReport, LinearControlSystem, SwitchedControlSystem};
