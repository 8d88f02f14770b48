//! Uniform cell-centered mesh on `[0, 1]`, solution states and initial data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{neumaier_sum, Scalar};

pub const MIN_CELLS: usize = 4;

/// Uniform finite-volume mesh: `n_cells` cells of width `dx = 1/n_cells`,
/// centers at `(i + ½) dx`, faces at `j dx` for `j = 0..=n_cells`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    n_cells: usize,
    dx: T,
}

impl<T: Scalar> Grid<T> {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < MIN_CELLS {
            return Err(Error::Size(format!(
                "grid needs at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        Ok(Self {
            n_cells,
            dx: T::one() / T::from_count(n_cells),
        })
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn n_faces(&self) -> usize {
        self.n_cells + 1
    }

    #[inline]
    pub fn dx(&self) -> T {
        self.dx
    }

    #[inline]
    pub fn center(&self, i: usize) -> T {
        (T::from_count(i) + T::half()) * self.dx
    }

    #[inline]
    pub fn face(&self, j: usize) -> T {
        T::from_count(j) * self.dx
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn faces(&self) -> Vec<T> {
        (0..self.n_faces()).map(|j| self.face(j)).collect()
    }

    /// Midpoint-rule integral of cell values, compensated.
    pub fn integrate_cells(&self, values: impl IntoIterator<Item = T>) -> T {
        neumaier_sum(values) * self.dx
    }

    pub(crate) fn check_cells(&self, len: usize) -> Result<()> {
        if len == self.n_cells {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.n_cells,
                actual: len,
            })
        }
    }
}

/// Builds the uniform mesh with `n_cells` cells (at least four).
pub fn make_grid<T: Scalar>(n_cells: usize) -> Result<Grid<T>> {
    Grid::new(n_cells)
}

/// Time stamp with cell averages of `u` (density) and `v` (chemoattractant).
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub t: T,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> State<T> {
    pub fn new(t: T, u: Vec<T>, v: Vec<T>) -> Self {
        Self { t, u, v }
    }

    /// Constant state `(u, v) ≡ (u0, v0)`.
    pub fn uniform(grid: &Grid<T>, u0: T, v0: T) -> Self {
        Self {
            t: T::zero(),
            u: vec![u0; grid.n_cells()],
            v: vec![v0; grid.n_cells()],
        }
    }

    /// Checks array lengths and finiteness.
    pub fn validate(&self, grid: &Grid<T>) -> Result<()> {
        grid.check_cells(self.u.len())?;
        grid.check_cells(self.v.len())?;
        if !self.t.is_finite() {
            return Err(Error::NonFinite { field: "t", index: 0 });
        }
        for (field, values) in [("u", &self.u), ("v", &self.v)] {
            if let Some(index) = values.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { field, index });
            }
        }
        Ok(())
    }

    pub fn sup_u(&self) -> T {
        self.u.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_u(&self) -> T {
        self.u.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn min_v(&self) -> T {
        self.v.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Spatial profile of the initial density, before mass normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    /// `u₀ ≡ mass`.
    Constant,
    /// `u₀(x) ∝ 1 + amplitude·cos(πx)`, `amplitude ∈ [0, 1)`.
    Cosine { amplitude: T },
    /// `u₀(x) ∝ exp(-((x - center)/width)²)`.
    Bump { width: T, center: T },
    /// Explicit cell values, rescaled to the target mass.
    Cells(Vec<T>),
}

/// How the initial chemoattractant is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V0Mode {
    /// `v₀ = u₀`.
    #[default]
    EqualToU0,
    /// `v₀ ≡ mass`.
    ConstantMass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition<T> {
    pub profile: Profile<T>,
    pub mass: T,
    pub v0_mode: V0Mode,
}

impl<T: Scalar> InitialCondition<T> {
    pub fn new(profile: Profile<T>, mass: T) -> Self {
        Self {
            profile,
            mass,
            v0_mode: V0Mode::default(),
        }
    }

    pub fn with_v0_mode(mut self, mode: V0Mode) -> Self {
        self.v0_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > T::zero()) {
            return Err(Error::InvalidParameter {
                key: "mass",
                reason: format!("mass must be positive and finite, got {}", self.mass),
            });
        }
        match &self.profile {
            Profile::Constant | Profile::Cells(_) => {}
            Profile::Cosine { amplitude } => {
                if !(*amplitude >= T::zero() && *amplitude < T::one()) {
                    return Err(Error::InvalidParameter {
                        key: "amplitude",
                        reason: format!("amplitude must lie in [0, 1), got {amplitude}"),
                    });
                }
            }
            Profile::Bump { width, center } => {
                if !(width.is_finite() && *width > T::zero()) {
                    return Err(Error::InvalidParameter {
                        key: "width",
                        reason: format!("width must be positive, got {width}"),
                    });
                }
                if !center.is_finite() {
                    return Err(Error::InvalidParameter {
                        key: "center",
                        reason: "center must be finite".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Samples the initial condition on `grid` at `t = 0`.
pub fn make_initial_state<T: Scalar>(grid: &Grid<T>, ic: &InitialCondition<T>) -> Result<State<T>> {
    ic.validate()?;
    let n = grid.n_cells();
    let u = match &ic.profile {
        Profile::Constant => vec![ic.mass; n],
        Profile::Cosine { amplitude } => normalize(
            grid,
            grid.centers()
                .into_iter()
                .map(|x| ic.mass * (T::one() + *amplitude * (T::PI() * x).cos()))
                .collect(),
            ic.mass,
        )?,
        Profile::Bump { width, center } => normalize(
            grid,
            grid.centers()
                .into_iter()
                .map(|x| {
                    let z = (x - *center) / *width;
                    (-z * z).exp()
                })
                .collect(),
            ic.mass,
        )?,
        Profile::Cells(values) => {
            grid.check_cells(values.len())?;
            normalize(grid, values.clone(), ic.mass)?
        }
    };
    let v = match ic.v0_mode {
        V0Mode::EqualToU0 => u.clone(),
        V0Mode::ConstantMass => vec![ic.mass; n],
    };
    let state = State::new(T::zero(), u, v);
    state.validate(grid)?;
    Ok(state)
}

fn normalize<T: Scalar>(grid: &Grid<T>, mut u: Vec<T>, mass: T) -> Result<Vec<T>> {
    if let Some(cell) = u.iter().position(|x| *x < T::zero()) {
        return Err(Error::Negativity {
            cell,
            value: u[cell].as_f64(),
        });
    }
    let current = grid.integrate_cells(u.iter().copied());
    if !(current > T::zero()) || !current.is_finite() {
        return Err(Error::InvalidParameter {
            key: "ic",
            reason: "initial profile has no positive mass on this grid".into(),
        });
    }
    let scale = mass / current;
    u.iter_mut().for_each(|x| *x = *x * scale);
    Ok(u)
}
