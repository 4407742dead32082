//! Shared fixtures for the benchmarks.

use invkit::fixtures;
use invkit::polyhedra::{build_partition, facet_cones, quadrants};
use invkit::{Result, SynthesisProblem};

/// The double integrator with quadrant pieces.
pub fn quadrant_problem() -> Result<SynthesisProblem> {
    SynthesisProblem::new(
        fixtures::double_integrator(),
        build_partition(quadrants(2))?,
    )
}

/// The double integrator with the facet cones of the polar of its kernel.
pub fn kernel_facet_problem() -> Result<SynthesisProblem> {
    let polar = fixtures::double_integrator_kernel().polar_polytope()?;
    SynthesisProblem::new(
        fixtures::double_integrator(),
        build_partition(facet_cones(&polar)?)?,
    )
}
