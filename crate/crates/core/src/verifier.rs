//! Trajectory-independent checks of the one-dimensional key identity
//!
//! ```text
//! φ ∂x 𝓜(φ) = ∂x( φ a(φ) ∂x( (a(φ)/φ) ∂x φ ) ),
//! 𝓜(φ) = (a a'/φ) φ'² - (a²/(2φ²)) φ'² + (a²/φ) φ''   (a = a(φ)),
//! ```
//!
//! on analytic test profiles, and observed convergence orders of the
//! trajectory residuals under mesh refinement.
//!
//! The identity check evaluates everything inside the outermost derivative
//! analytically and applies centered differences only on the outside, so a
//! second-order residual is expected.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{RunOutcome, RunStatus};
use crate::models::DiffusionModel;
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::series::{energy_bookkeeping, residual_maxima};

/// Fewest nodes accepted by [`key_identity_residual`].
pub const MIN_IDENTITY_NODES: usize = 16;

/// Residuals at or below this level count as exact for the identity check.
pub const IDENTITY_EXACT_TOL: f64 = 1e-13;

/// Order required of the identity residual for boundary-compatible profiles.
pub const IDENTITY_TARGET_ORDER: f64 = 1.9;

/// Order required for profiles that are not flat at the boundary, whose
/// residual approaches second order more slowly.
pub const IDENTITY_TARGET_ORDER_GENERAL: f64 = 1.8;

/// Residuals at or below this level count as exact in a refinement study.
pub const STUDY_EXACT_TOL: f64 = 1e-10;

/// Order required of trajectory residuals.
pub const STUDY_TARGET_ORDER: f64 = 1.0;

/// Positive analytic profiles on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestProfile<T> {
    /// `φ ≡ c`.
    Constant(T),
    /// `2 + cos(πx)`.
    CosinePi,
    /// `2 + cos(2πx)`.
    Cosine2Pi,
    /// `2 + x(1-x)`; not flat at the boundary.
    Quadratic,
}

/// `(φ, φ', φ'', φ''')` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
}

impl<T: Scalar> TestProfile<T> {
    /// Every bundled profile with the constant `c = 2`.
    pub fn bundled() -> Vec<Self> {
        vec![
            TestProfile::Constant(T::two()),
            TestProfile::CosinePi,
            TestProfile::Cosine2Pi,
            TestProfile::Quadratic,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestProfile::Constant(_) => "constant",
            TestProfile::CosinePi => "cos_pi",
            TestProfile::Cosine2Pi => "cos_2pi",
            TestProfile::Quadratic => "quadratic",
        }
    }

    /// Looks a profile up by [`name`](Self::name).
    pub fn from_name(name: &str) -> Option<Self> {
        Self::bundled().into_iter().find(|p| p.name() == name)
    }

    /// `φ'(0) = φ'(1) = 0`.
    pub fn boundary_compatible(&self) -> bool {
        !matches!(self, TestProfile::Quadratic)
    }

    pub fn target_order(&self) -> T {
        if self.boundary_compatible() {
            T::lit(IDENTITY_TARGET_ORDER)
        } else {
            T::lit(IDENTITY_TARGET_ORDER_GENERAL)
        }
    }

    /// Lower bound of `φ` on `[0, 1]`.
    pub fn positivity_margin(&self) -> T {
        match *self {
            TestProfile::Constant(c) => c,
            TestProfile::CosinePi | TestProfile::Cosine2Pi => T::one(),
            TestProfile::Quadratic => T::two(),
        }
    }

    pub fn jet(&self, x: T) -> Jet<T> {
        let cosine = |k: T| {
            let (s, c) = (k * x).sin_cos();
            Jet {
                value: T::two() + c,
                d1: -k * s,
                d2: -k * k * c,
                d3: k * k * k * s,
            }
        };
        match *self {
            TestProfile::Constant(c) => Jet {
                value: c,
                d1: T::zero(),
                d2: T::zero(),
                d3: T::zero(),
            },
            TestProfile::CosinePi => cosine(T::PI()),
            TestProfile::Cosine2Pi => cosine(T::two() * T::PI()),
            TestProfile::Quadratic => Jet {
                value: T::two() + x * (T::one() - x),
                d1: T::one() - T::two() * x,
                d2: -T::two(),
                d3: T::zero(),
            },
        }
    }
}

/// `𝓜(φ)` at one point from `φ, φ', φ''`.
pub fn m_pointwise<T: Scalar>(model: &DiffusionModel<T>, phi: T, d1: T, d2: T) -> Result<T> {
    if !(phi > T::zero()) {
        return Err(Error::Domain {
            what: "M(phi)",
            value: phi.as_f64(),
        });
    }
    let a = model.diffusivity(phi)?;
    let da = model.diffusivity_slope(phi)?;
    let g2 = d1 * d1;
    Ok(a * da / phi * g2 - a * a / (T::two() * phi * phi) * g2 + a * a / phi * d2)
}

/// `𝓜(φ)` at every node from sampled `φ` and its analytic derivatives.
pub fn m_operator<T: Scalar>(model: &DiffusionModel<T>, phi: &[T], d1: &[T], d2: &[T]) -> Result<Vec<T>> {
    for other in [d1, d2] {
        if other.len() != phi.len() {
            return Err(Error::LengthMismatch {
                expected: phi.len(),
                actual: other.len(),
            });
        }
    }
    phi.iter()
        .zip(d1)
        .zip(d2)
        .map(|((&p, &g), &h)| m_pointwise(model, p, g, h))
        .collect()
}

/// Max-norm of `LHS - RHS` of the key identity on the nodes `x_k = k/n`,
/// `k = 2..=n-2`.
pub fn key_identity_residual<T: Scalar>(profile: &TestProfile<T>, model: &DiffusionModel<T>, n: usize) -> Result<T> {
    if n + 1 < MIN_IDENTITY_NODES {
        return Err(Error::Size(format!(
            "identity check needs at least {MIN_IDENTITY_NODES} nodes, got {}",
            n + 1
        )));
    }
    let h = T::from_count(n).recip();
    let jets: Vec<Jet<T>> = (0..=n).map(|k| profile.jet(T::from_count(k) * h)).collect();
    let phi: Vec<T> = jets.iter().map(|j| j.value).collect();
    let d1: Vec<T> = jets.iter().map(|j| j.d1).collect();
    let d2: Vec<T> = jets.iter().map(|j| j.d2).collect();
    let m = m_operator(model, &phi, &d1, &d2)?;

    // inner flux (a/φ) φ' is analytic; the two outer derivatives are centered
    let mut inner = Vec::with_capacity(n + 1);
    for k in 0..=n {
        inner.push(model.diffusivity(phi[k])? / phi[k] * d1[k]);
    }
    let inv_2h = (T::two() * h).recip();
    let mut outer = vec![T::zero(); n + 1];
    for k in 1..n {
        outer[k] = phi[k] * model.diffusivity(phi[k])? * (inner[k + 1] - inner[k - 1]) * inv_2h;
    }
    let residual = (2..=n - 2)
        .map(|k| {
            let lhs = phi[k] * (m[k + 1] - m[k - 1]) * inv_2h;
            let rhs = (outer[k + 1] - outer[k - 1]) * inv_2h;
            (lhs - rhs).abs()
        })
        .fold(T::zero(), T::max);
    Ok(residual)
}

/// Residual norms over a refinement ladder and their observed orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport<T> {
    pub resolutions: Vec<usize>,
    pub residuals: Vec<T>,
    /// `log(r_k / r_{k+1}) / log(n_{k+1} / n_k)`; zero between exact levels.
    pub orders: Vec<T>,
    pub target: T,
    /// Every residual is at roundoff.
    pub exact: bool,
    pub pass: bool,
}

impl<T: Scalar> ConvergenceReport<T> {
    pub fn new(resolutions: Vec<usize>, residuals: Vec<T>, target: T, exact_tol: T) -> Result<Self> {
        check_ladder(&resolutions)?;
        if residuals.len() != resolutions.len() {
            return Err(Error::LengthMismatch {
                expected: resolutions.len(),
                actual: residuals.len(),
            });
        }
        let exact = residuals.iter().all(|&r| r <= exact_tol);
        let orders: Vec<T> = resolutions
            .windows(2)
            .zip(residuals.windows(2))
            .map(|(n, r)| {
                if r[0] <= exact_tol && r[1] <= exact_tol {
                    T::zero()
                } else {
                    let ratio = T::from_count(n[1]) / T::from_count(n[0]);
                    (r[0] / r[1].max(T::min_positive_value())).ln() / ratio.ln()
                }
            })
            .collect();
        let pass = residuals.iter().all(|r| r.is_finite()) && (exact || orders.iter().all(|&q| q >= target));
        Ok(Self {
            resolutions,
            residuals,
            orders,
            target,
            exact,
            pass,
        })
    }

    pub fn min_order(&self) -> T {
        self.orders.iter().copied().fold(T::infinity(), T::min)
    }
}

fn check_ladder(resolutions: &[usize]) -> Result<()> {
    if resolutions.len() < 3 {
        return Err(Error::Usage(format!(
            "a refinement study needs at least 3 resolutions, got {}",
            resolutions.len()
        )));
    }
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage(format!(
            "resolutions must be strictly increasing, got {resolutions:?}"
        )));
    }
    Ok(())
}

/// Key identity residuals of `profile` on each node count in `resolutions`.
pub fn identity_study<T: Scalar>(
    profile: &TestProfile<T>,
    model: &DiffusionModel<T>,
    resolutions: &[usize],
) -> Result<ConvergenceReport<T>> {
    check_ladder(resolutions)?;
    let residuals = resolutions
        .iter()
        .map(|&n| key_identity_residual(profile, model, n))
        .collect::<Result<Vec<_>>>()?;
    ConvergenceReport::new(
        resolutions.to_vec(),
        residuals,
        profile.target_order(),
        T::lit(IDENTITY_EXACT_TOL),
    )
}

/// Trajectory residual measured by a refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// Largest `|ΔF/Δt + D̄ - R̄|` over sampling intervals.
    FIdentity,
    /// Largest `|ΔL/Δt + diss̄|` over sampling intervals.
    LIdentity,
    /// `|L(0) - L(t) - ∫diss|` at the final time.
    EnergyBookkeeping,
}

impl Selector {
    pub const ALL: [Selector; 3] = [Selector::FIdentity, Selector::LIdentity, Selector::EnergyBookkeeping];

    pub fn name(self) -> &'static str {
        match self {
            Selector::FIdentity => "f_identity",
            Selector::LIdentity => "l_identity",
            Selector::EnergyBookkeeping => "energy_bookkeeping",
        }
    }

    pub fn measure<T: Scalar>(self, outcome: &RunOutcome<T>) -> T {
        match self {
            Selector::FIdentity => residual_maxima(&outcome.snapshots).f_identity,
            Selector::LIdentity => residual_maxima(&outcome.snapshots).l_identity,
            Selector::EnergyBookkeeping => energy_bookkeeping(&outcome.snapshots)
                .last()
                .map_or(T::zero(), |r| r.abs()),
        }
    }
}

/// Runs `scenario` on every resolution, scaling its sampling interval by
/// `resolutions[0] / n`. Fails on the first run that does not complete.
pub fn refinement_runs<T: Scalar>(scenario: &Scenario<T>, resolutions: &[usize]) -> Result<Vec<RunOutcome<T>>> {
    check_ladder(resolutions)?;
    let base = T::from_count(resolutions[0]);
    let outcomes = resolutions
        .par_iter()
        .map(|&n| {
            let refined = scenario.refined(n, scenario.sample_interval * base / T::from_count(n));
            refined.run()
        })
        .collect::<Result<Vec<_>>>()?;
    for (&n, out) in resolutions.iter().zip(&outcomes) {
        if out.status != RunStatus::Completed {
            return Err(Error::RunFailed {
                n_cells: n,
                status: out.status.to_string(),
            });
        }
    }
    Ok(outcomes)
}

/// Report for `selector` over runs produced by [`refinement_runs`].
pub fn report_from_runs<T: Scalar>(
    resolutions: &[usize],
    outcomes: &[RunOutcome<T>],
    selector: Selector,
) -> Result<ConvergenceReport<T>> {
    ConvergenceReport::new(
        resolutions.to_vec(),
        outcomes.iter().map(|o| selector.measure(o)).collect(),
        T::lit(STUDY_TARGET_ORDER),
        T::lit(STUDY_EXACT_TOL),
    )
}

pub fn refinement_study<T: Scalar>(
    scenario: &Scenario<T>,
    resolutions: &[usize],
    selector: Selector,
) -> Result<ConvergenceReport<T>> {
    let outcomes = refinement_runs(scenario, resolutions)?;
    report_from_runs(resolutions, &outcomes, selector)
}
