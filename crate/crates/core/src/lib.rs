//! Finite-volume simulation and functional auditing for the 1D quasilinear
//! Keller–Segel system
//!
//! ```text
//! u_t = (a(u) u_x - u v_x)_x,   v_t = v_xx - v + u   on (0, 1),
//! ```
//!
//! with zero-flux boundaries and power-law diffusion `a(u) = (1+u)^(-p)`.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the double-precision types used by the CLI and the
//! acceptance suite.

// `!(x > 0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functionals;
pub mod grid;
pub mod integrator;
pub mod models;
pub mod operators;
pub mod quadrature;
pub mod scalar;
pub mod scenario;
pub mod series;
pub mod verifier;

pub use error::{Error, Result};
pub use functionals::FunctionalSnapshot;
pub use grid::{Grid, InitialCondition, Profile, State, V0Mode};
pub use integrator::{RunOutcome, RunStatus, StepControl};
pub use models::DiffusionModel;
pub use operators::{Dynamics, FluxScheme, Forcing};
pub use scalar::Scalar;
pub use scenario::Scenario;
pub use verifier::{ConvergenceReport, Selector, TestProfile};

pub type DiffusionModel64 = DiffusionModel<f64>;
pub type Grid64 = Grid<f64>;
pub type State64 = State<f64>;
pub type InitialCondition64 = InitialCondition<f64>;
pub type StepControl64 = StepControl<f64>;
pub type Scenario64 = Scenario<f64>;
pub type RunOutcome64 = RunOutcome<f64>;
pub type FunctionalSnapshot64 = FunctionalSnapshot<f64>;
pub type ConvergenceReport64 = ConvergenceReport<f64>;

pub type DiffusionModel32 = DiffusionModel<f32>;
pub type Scenario32 = Scenario<f32>;
