//! A complete run description: model, mesh, initial data, stepping and
//! sampling.

use crate::error::{Error, Result};
use crate::grid::{make_grid, make_initial_state, InitialCondition, Profile, V0Mode};
use crate::integrator::{run_trajectory_with, RunOutcome, StepControl};
use crate::models::{DiffusionModel, DEFAULT_QUADRATURE_TOL};
use crate::operators::{Dynamics, Forcing};
use crate::scalar::Scalar;

/// End time up to which [`Scenario::critical_cosine`] stays resolved on 64 to
/// 256 cells; later, the boundary spike narrows below the mesh width and the
/// discrete solution collapses into a single cell.
pub const COSINE_RESOLVED_T_END: f64 = 0.15;

/// Sampling interval paired with [`COSINE_RESOLVED_T_END`] on 64 cells.
pub const COSINE_BASE_SAMPLE_INTERVAL: f64 = 0.015;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub exponent: T,
    pub quadrature_tol: T,
    pub n_cells: usize,
    pub t_end: T,
    pub sample_interval: T,
    pub ic: InitialCondition<T>,
    pub control: StepControl<T>,
    pub dynamics: Dynamics,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(exponent: T, n_cells: usize, t_end: T, sample_interval: T, ic: InitialCondition<T>) -> Self {
        Self {
            exponent,
            quadrature_tol: T::lit(DEFAULT_QUADRATURE_TOL),
            n_cells,
            t_end,
            sample_interval,
            ic,
            control: StepControl::default(),
            dynamics: Dynamics::default(),
        }
    }

    /// `(u, v) ≡ (1, 1)` under critical diffusion.
    pub fn steady(n_cells: usize, t_end: T, sample_interval: T) -> Self {
        Self::new(
            T::one(),
            n_cells,
            t_end,
            sample_interval,
            InitialCondition::new(Profile::Constant, T::one()),
        )
    }

    /// Critical diffusion, `u₀ ∝ 1 + ½cos(πx)` with mass 4, `v₀ = u₀`.
    pub fn critical_cosine(n_cells: usize, t_end: T, sample_interval: T) -> Self {
        Self::new(
            T::one(),
            n_cells,
            t_end,
            sample_interval,
            InitialCondition::new(Profile::Cosine { amplitude: T::half() }, T::lit(4.0)),
        )
    }

    /// [`critical_cosine`](Self::critical_cosine) over its resolved window,
    /// sampled for a 64-cell base level.
    pub fn critical_cosine_resolved(n_cells: usize) -> Self {
        let base = T::lit(COSINE_BASE_SAMPLE_INTERVAL) * T::lit(64.0) / T::from_count(n_cells);
        Self::critical_cosine(n_cells, T::lit(COSINE_RESOLVED_T_END), base)
    }

    /// Critical diffusion from a Gaussian bump of width 0.1 at the center.
    pub fn critical_bump(n_cells: usize, mass: T, t_end: T, sample_interval: T) -> Self {
        Self::new(
            T::one(),
            n_cells,
            t_end,
            sample_interval,
            InitialCondition::new(
                Profile::Bump {
                    width: T::lit(0.1),
                    center: T::half(),
                },
                mass,
            ),
        )
    }

    /// Diffusion-free transport plus a `u²` source, whose sup norm escapes
    /// no later than `1/sup u₀`.
    pub fn forced_growth(n_cells: usize, t_end: T) -> Self {
        let mut s = Self::new(
            T::one(),
            n_cells,
            t_end,
            t_end / T::lit(20.0),
            InitialCondition::new(Profile::Cosine { amplitude: T::half() }, T::one())
                .with_v0_mode(V0Mode::ConstantMass),
        );
        s.dynamics.forcing = Forcing::QuadraticGrowth;
        s
    }

    /// Same scenario on `n_cells` cells with the given sampling.
    pub fn refined(&self, n_cells: usize, sample_interval: T) -> Self {
        Self {
            n_cells,
            sample_interval,
            ..self.clone()
        }
    }

    pub fn model(&self) -> Result<DiffusionModel<T>> {
        DiffusionModel::new(self.exponent, self.quadrature_tol)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        make_grid::<T>(self.n_cells)?;
        self.ic.validate()?;
        self.control.validate()?;
        if !(self.t_end > T::zero() && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter {
                key: "t_end",
                reason: format!("must be positive and finite, got {}", self.t_end),
            });
        }
        if !(self.sample_interval > T::zero() && self.sample_interval.is_finite()) {
            return Err(Error::InvalidParameter {
                key: "sample_interval",
                reason: format!("must be positive and finite, got {}", self.sample_interval),
            });
        }
        Ok(())
    }

    pub fn run(&self) -> Result<RunOutcome<T>> {
        self.validate()?;
        let model = self.model()?;
        let grid = make_grid(self.n_cells)?;
        let initial = make_initial_state(&grid, &self.ic)?;
        run_trajectory_with(
            initial,
            &model,
            &grid,
            &self.control,
            self.t_end,
            self.sample_interval,
            self.dynamics,
        )
    }
}
