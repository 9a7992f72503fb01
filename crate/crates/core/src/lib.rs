//! Discrete-velocity solver for a simplified kinetic model of turbulent flow
//! in two space dimensions.
//!
//! The unknown is an α-mass density `rho(t, x, alpha)` on a rectangle of
//! positions times a rectangle of velocities. It evolves under
//!
//! ```text
//! rho_t + alpha . grad_x rho - nu lap_x rho = kappa * int M(alpha, beta) d beta
//! ```
//!
//! where the right-hand side (the mixer) redistributes density among
//! velocities at each point without changing the Euler mass density.
//!
//! - [`grid`]: space, velocity and time grids, trapezoid weights
//! - [`mixer`]: the mixer kernel and its velocity quadrature
//! - [`scheme`]: Crank–Nicolson operators, Dirichlet terms
//! - [`solver`]: Picard/Richardson time stepping and stability bound
//! - [`euler`]: Euler observables and the mass budget
//! - [`scenario`], [`manufactured`]: boundary/initial data generators

pub mod error;
pub mod euler;
pub mod field;
pub mod grid;
pub mod manufactured;
pub mod mixer;
pub mod scenario;
pub mod scheme;
pub mod solver;

pub use error::{Error, Result};
pub use field::{DensityField, MaskedScalarField, MaskedVectorField, ScalarField, VectorField};
pub use grid::{QuadratureWeights, SpaceGrid, TimeGrid, VelIndex, VelocityGrid};
pub use scheme::{
    BoundaryData, SchemeCoefficients, SchemeOperator, Side, SourceTerm, ZeroBoundary,
};
pub use solver::{
    run_simulation, NorReport, Observer, Relaxation, RunOutcome, SolverSettings, StepReport,
    TimeStepper,
};
