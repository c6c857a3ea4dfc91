//! Solvers and convergence-study tooling for the time-fractional subdiffusion equation
//! d_t^a u - Laplace u = f with nonsmooth data.
//!
//! Spatial P1 finite elements on the unit interval or square, corrected BDF convolution
//! quadrature, the (corrected) L1 scheme and a space-time Petrov-Galerkin method, together with
//! the Mittag-Leffler function and the reference solutions used to measure errors.

pub mod cq_stepper;
pub mod harness;
pub mod l1_stepper;
pub mod laplace_reference;
pub mod linalg;
pub mod mesh_fem;
pub mod mittag_leffler;
pub mod quadrature;
pub mod spacetime_pg;
pub mod spectral_reference;
pub mod stepping;

pub use cq_stepper::{cq_weights, solve_cq, CorrectionTable, CqWeights};
pub use harness::{
    compute_rates, emit_csv, emit_markdown, run_experiment, ConfigError, ExperimentConfig, ExperimentReport, Scheme,
};
pub use l1_stepper::{l1_weights, solve_l1, L1Weights};
pub use laplace_reference::LaplaceReference;
pub use mesh_fem::{FemError, GridFunction, Mesh, MeshKind, SparseOperator};
pub use mittag_leffler::{mlf, MittagLeffler, MlfError, MlfParams};
pub use spacetime_pg::{pg_assemble, pg_evaluate, pg_l2qt_error, pg_solve, PgSystem, PgTrajectory};
pub use spectral_reference::{
    exact_solution, semidiscrete_exact_1d, InitialData, ProblemSpec, RefError, SeparableTerm, SpatialFactor,
    TimeFactor,
};
pub use stepping::{FemScheme, SpaceDisc, StepError, Trajectory, VhRule};
