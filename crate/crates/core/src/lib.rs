//! Spectral Galerkin solver for doubly nonlinear anisotropic evolution
//! equations `∂_t(|u|^{α−1}u) − ∇·A(x,t,u,∇u) = f` on boxes, with checks
//! for the energy estimate, comparison and uniqueness, weak-form residuals
//! and manufactured solutions.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod algebra;
pub mod assembly;
pub mod basis;
pub mod error;
pub mod expr;
pub mod linalg;
pub mod scalar;
pub mod solver;
pub mod timestep;
pub mod verification;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Domain = basis::BoxDomain<f64>;
pub type Basis = basis::GalerkinBasis<f64>;
pub type Problem = assembly::ProblemData<f64>;
pub type Field = assembly::FieldSpec<f64>;
pub type Stepper = timestep::StepperConfig<f64>;
pub type Schedule = solver::EpsilonSchedule<f64>;
pub type Trajectory = solver::SolutionTrajectory<f64>;
