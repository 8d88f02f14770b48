//! Adaptive explicit time stepping with blowup detection.
//!
//! Each attempt takes one classical RK4 step of size `dt` and two of size
//! `dt/2` from the same state; their difference is the local error estimate
//! and the two half steps are kept on acceptance. Steps are capped by an
//! explicit stability bound and clipped so that sample times are hit
//! exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{evaluate_snapshot, FunctionalSnapshot};
use crate::grid::{Grid, State};
use crate::models::DiffusionModel;
use crate::operators::{Dynamics, SemiDiscrete};
use crate::scalar::Scalar;

/// Undershoots of `u` (or `v`) above this value are treated as roundoff and
/// clamped to zero on acceptance; deeper ones reject the step.
pub const NEGATIVITY_CLAMP: f64 = -1e-13;

/// Accepted steps inspected when deciding whether the sup norm is growing.
const GROWTH_WINDOW: usize = 8;

/// Step-size control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl<T> {
    pub cfl_safety: T,
    /// Tolerance of the step-doubling error estimate, relative to `1 + |y|`.
    pub rel_tol: T,
    pub dt_min: T,
    pub dt_max: T,
    pub u_max_threshold: T,
}

impl<T: Scalar> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            cfl_safety: T::lit(0.4),
            rel_tol: T::lit(1e-7),
            dt_min: T::lit(1e-12),
            dt_max: T::lit(0.1),
            u_max_threshold: T::lit(1e6),
        }
    }
}

impl<T: Scalar> StepControl<T> {
    pub fn validate(&self) -> Result<()> {
        let invalid = |key, reason: String| Err(Error::InvalidParameter { key, reason });
        if !(self.cfl_safety > T::zero() && self.cfl_safety < T::one()) {
            return invalid("cfl_safety", format!("must lie in (0, 1), got {}", self.cfl_safety));
        }
        if !(self.rel_tol > T::zero() && self.rel_tol.is_finite()) {
            return invalid("rel_tol", format!("must be positive, got {}", self.rel_tol));
        }
        if !(self.dt_min > T::zero()) {
            return invalid("dt_min", format!("must be positive, got {}", self.dt_min));
        }
        if !(self.dt_max > self.dt_min && self.dt_max.is_finite()) {
            return invalid(
                "dt_max",
                format!("must be finite and exceed dt_min = {}, got {}", self.dt_min, self.dt_max),
            );
        }
        if !(self.u_max_threshold > T::zero()) {
            return invalid(
                "u_max_threshold",
                format!("must be positive, got {}", self.u_max_threshold),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupDetected,
    StepFailure,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowupDetected => "blowup_detected",
            RunStatus::StepFailure => "step_failure",
        }
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<T> {
    pub status: RunStatus,
    pub final_state: State<T>,
    /// Time at which breakdown was detected, for `BlowupDetected` only.
    pub blowup_time_estimate: Option<T>,
    pub snapshots: Vec<FunctionalSnapshot<T>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl<T: Scalar> RunOutcome<T> {
    pub fn max_sup_u(&self) -> T {
        self.snapshots
            .iter()
            .map(|s| s.sup_u)
            .fold(self.final_state.sup_u(), T::max)
    }
}

/// Why an attempted step was rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rejection<T> {
    NonFinite,
    Negative { cell: usize, value: T },
    ErrorTooLarge { estimate: T },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepAttempt<T> {
    Accepted { state: State<T>, error_estimate: T },
    Rejected(Rejection<T>),
}

/// Explicit stability bound
/// `safety · min(dx²/(2 max a(ū)), dx/(max |v_x| + ε), dx²/2)`.
pub fn stable_dt<T: Scalar>(
    state: &State<T>,
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
    control: &StepControl<T>,
) -> T {
    let dx = grid.dx();
    let inv_dx = dx.recip();
    let mut max_a = T::zero();
    let mut max_grad = T::zero();
    for j in 1..state.u.len() {
        let ubar = T::half() * (state.u[j - 1] + state.u[j]);
        max_a = max_a.max(model.diffusivity_raw(ubar.max(T::zero())));
        max_grad = max_grad.max(((state.v[j] - state.v[j - 1]) * inv_dx).abs());
    }
    let parabolic = dx * dx * T::half();
    let diffusive = if max_a > T::zero() {
        parabolic / max_a
    } else {
        T::infinity()
    };
    let advective = dx / (max_grad + T::lit(1e-30));
    control.cfl_safety * diffusive.min(advective).min(parabolic)
}

/// Classical RK4 plus step doubling over a fixed semidiscretization.
///
/// Steps are formed as increments and added to the state with error-free
/// two-sum updates; the rounding residue is carried between accepted steps
/// of a run, so long runs do not accumulate correlated rounding drift in
/// the mass.
pub struct Stepper<'a, T: Scalar> {
    rhs: SemiDiscrete<'a, T>,
    rel_tol: T,
    k0: (Vec<T>, Vec<T>),
    k: [(Vec<T>, Vec<T>); 4],
    stage: (Vec<T>, Vec<T>),
    big: (Vec<T>, Vec<T>),
    half: (Vec<T>, Vec<T>),
    mid: (Vec<T>, Vec<T>),
    fine: (Vec<T>, Vec<T>),
    carry: (Vec<T>, Vec<T>),
    next_carry: (Vec<T>, Vec<T>),
}

fn zeros<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    (vec![T::zero(); n], vec![T::zero(); n])
}

/// `x + y` rounded, and its exact rounding error.
#[inline]
fn two_sum<T: Scalar>(x: T, y: T) -> (T, T) {
    let s = x + y;
    let z = s - x;
    (s, (x - (s - z)) + (y - z))
}

impl<'a, T: Scalar> Stepper<'a, T> {
    pub fn new(model: &'a DiffusionModel<T>, grid: &'a Grid<T>, dynamics: Dynamics, rel_tol: T) -> Self {
        let n = grid.n_cells();
        Self {
            rhs: SemiDiscrete::new(model, grid, dynamics),
            rel_tol,
            k0: zeros(n),
            k: [zeros(n), zeros(n), zeros(n), zeros(n)],
            stage: zeros(n),
            big: zeros(n),
            half: zeros(n),
            mid: zeros(n),
            fine: zeros(n),
            carry: zeros(n),
            next_carry: zeros(n),
        }
    }

    /// Increment of one RK4 step of size `dt` from `(u, v)` whose right-hand
    /// side is already in `k0`.
    #[allow(clippy::too_many_arguments)]
    fn rk4(
        rhs: &mut SemiDiscrete<'a, T>,
        k0: &(Vec<T>, Vec<T>),
        k: &mut [(Vec<T>, Vec<T>); 4],
        stage: &mut (Vec<T>, Vec<T>),
        u: &[T],
        v: &[T],
        dt: T,
        inc: &mut (Vec<T>, Vec<T>),
    ) {
        let n = u.len();
        let half_dt = T::half() * dt;
        let coeffs = [half_dt, half_dt, dt];
        for s in 0..3 {
            let prev = if s == 0 { k0 } else { &k[s - 1] };
            for i in 0..n {
                stage.0[i] = u[i] + coeffs[s] * prev.0[i];
                stage.1[i] = v[i] + coeffs[s] * prev.1[i];
            }
            let (ku, kv) = &mut k[s];
            rhs.eval(&stage.0, &stage.1, ku, kv);
        }
        let sixth = dt / T::lit(6.0);
        let two = T::two();
        for i in 0..n {
            inc.0[i] = sixth * (k0.0[i] + two * (k[0].0[i] + k[1].0[i]) + k[2].0[i]);
            inc.1[i] = sixth * (k0.1[i] + two * (k[0].1[i] + k[1].1[i]) + k[2].1[i]);
        }
    }

    /// Attempts one step of size `dt` from `state`, without a carried
    /// rounding residue.
    pub fn attempt(&mut self, state: &State<T>, dt: T) -> StepAttempt<T> {
        self.reset_carry();
        self.attempt_carried(state, dt)
    }

    /// Drops the carried rounding residue.
    pub fn reset_carry(&mut self) {
        for c in [&mut self.carry.0, &mut self.carry.1] {
            c.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    /// Makes the residue of the last accepted attempt the carried one. Call
    /// after accepting a [`attempt_carried`](Self::attempt_carried) result.
    pub fn commit(&mut self) {
        std::mem::swap(&mut self.carry, &mut self.next_carry);
    }

    /// Attempts one step of size `dt` from `state`, which must be the state
    /// accepted (and committed) last, or a state with a reset carry.
    pub fn attempt_carried(&mut self, state: &State<T>, dt: T) -> StepAttempt<T> {
        let (u, v) = (&state.u, &state.v);
        let n = u.len();
        self.rhs.eval(u, v, &mut self.k0.0, &mut self.k0.1);
        Self::rk4(&mut self.rhs, &self.k0, &mut self.k, &mut self.stage, u, v, dt, &mut self.big);
        let half_dt = T::half() * dt;
        Self::rk4(&mut self.rhs, &self.k0, &mut self.k, &mut self.stage, u, v, half_dt, &mut self.half);
        for i in 0..n {
            self.mid.0[i] = u[i] + self.half.0[i];
            self.mid.1[i] = v[i] + self.half.1[i];
        }
        self.rhs.eval(&self.mid.0, &self.mid.1, &mut self.k0.0, &mut self.k0.1);
        Self::rk4(
            &mut self.rhs,
            &self.k0,
            &mut self.k,
            &mut self.stage,
            &self.mid.0,
            &self.mid.1,
            half_dt,
            &mut self.fine,
        );

        let mut next_u = vec![T::zero(); n];
        let mut next_v = vec![T::zero(); n];
        let mut estimate = T::zero();
        let fifteen = T::lit(15.0);
        let clamp = T::lit(NEGATIVITY_CLAMP);
        let fields = [
            (u, &self.half.0, &self.fine.0, &self.big.0, &self.carry.0, &mut self.next_carry.0, &mut next_u),
            (v, &self.half.1, &self.fine.1, &self.big.1, &self.carry.1, &mut self.next_carry.1, &mut next_v),
        ];
        for (x, half, fine, big, carry, next_carry, out) in fields {
            for i in 0..n {
                let inc = half[i] + fine[i];
                let (value, err) = two_sum(x[i], inc + carry[i]);
                if !value.is_finite() || !big[i].is_finite() {
                    return StepAttempt::Rejected(Rejection::NonFinite);
                }
                if value < clamp {
                    return StepAttempt::Rejected(Rejection::Negative { cell: i, value });
                }
                estimate = estimate.max((inc - big[i]).abs() / (fifteen * (T::one() + value.abs())));
                if value < T::zero() {
                    out[i] = T::zero();
                    next_carry[i] = T::zero();
                } else {
                    out[i] = value;
                    next_carry[i] = err;
                }
            }
        }
        if estimate > self.rel_tol {
            return StepAttempt::Rejected(Rejection::ErrorTooLarge { estimate });
        }
        StepAttempt::Accepted {
            state: State::new(state.t + dt, next_u, next_v),
            error_estimate: estimate,
        }
    }
}

/// One step-doubled RK4 attempt of the chemotaxis system.
pub fn attempt_step<T: Scalar>(
    state: &State<T>,
    dt: T,
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
    control: &StepControl<T>,
) -> Result<StepAttempt<T>> {
    state.validate(grid)?;
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter {
            key: "dt",
            reason: format!("step must be positive, got {dt}"),
        });
    }
    Ok(Stepper::new(model, grid, Dynamics::default(), control.rel_tol).attempt(state, dt))
}

/// Advances the chemotaxis system from `initial` to `t_end`, sampling every
/// `sample_interval`.
pub fn run_trajectory<T: Scalar>(
    initial: State<T>,
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
    control: &StepControl<T>,
    t_end: T,
    sample_interval: T,
) -> Result<RunOutcome<T>> {
    run_trajectory_with(initial, model, grid, control, t_end, sample_interval, Dynamics::default())
}

/// As [`run_trajectory`], with an explicit flux scheme and forcing.
pub fn run_trajectory_with<T: Scalar>(
    initial: State<T>,
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
    control: &StepControl<T>,
    t_end: T,
    sample_interval: T,
    dynamics: Dynamics,
) -> Result<RunOutcome<T>> {
    control.validate()?;
    initial.validate(grid)?;
    if !(t_end > initial.t) || !t_end.is_finite() {
        return Err(Error::InvalidParameter {
            key: "t_end",
            reason: format!("must exceed the initial time {}, got {t_end}", initial.t),
        });
    }
    if !(sample_interval > T::zero()) || !sample_interval.is_finite() {
        return Err(Error::InvalidParameter {
            key: "sample_interval",
            reason: format!("must be positive, got {sample_interval}"),
        });
    }

    let t0 = initial.t;
    let landing = T::lit(1e-12) * (T::one() + t_end.abs());
    let sample_time = |k: usize| (t0 + T::from_count(k) * sample_interval).min(t_end);
    let mut next_k = 1usize;
    let mut next_sample = sample_time(next_k);

    let mut stepper = Stepper::new(model, grid, dynamics, control.rel_tol);
    let mut state = initial;
    let mut dt = stable_dt(&state, model, grid, control).min(control.dt_max);
    let mut last_dt = dt;
    let mut snapshots = vec![evaluate_snapshot(&state, model, grid, dt, T::zero())?];
    let mut sup_history = vec![state.sup_u()];
    let (mut accepted, mut rejected) = (0usize, 0usize);

    let status = loop {
        if t_end - state.t <= landing {
            break RunStatus::Completed;
        }
        dt = dt.min(stable_dt(&state, model, grid, control)).min(control.dt_max);
        if dt < control.dt_min {
            let growing = sup_history.len() > 1
                && sup_history.last() > sup_history.first()
                && sup_history.windows(2).all(|w| w[1] >= w[0]);
            break if growing {
                RunStatus::BlowupDetected
            } else {
                RunStatus::StepFailure
            };
        }
        let to_sample = next_sample - state.t;
        let clipped = dt >= to_sample - landing;
        let step = if clipped { to_sample } else { dt };

        match stepper.attempt_carried(&state, step) {
            StepAttempt::Accepted {
                state: mut next,
                error_estimate,
            } => {
                stepper.commit();
                accepted += 1;
                if clipped {
                    next.t = next_sample;
                }
                state = next;
                last_dt = step;
                let sup = state.sup_u();
                if sup_history.len() == GROWTH_WINDOW {
                    sup_history.remove(0);
                }
                sup_history.push(sup);

                let factor = if error_estimate > T::zero() {
                    T::lit(0.9) * (control.rel_tol / error_estimate).powf(T::lit(0.2))
                } else {
                    T::two()
                };
                // a clipped step says nothing about the unclipped size
                if !clipped || factor < T::one() {
                    dt = dt * factor.min(T::two()).max(T::lit(0.2));
                }

                if clipped {
                    push_snapshot(&mut snapshots, &state, model, grid, last_dt)?;
                    next_k += 1;
                    next_sample = sample_time(next_k);
                }
                if sup > control.u_max_threshold {
                    break RunStatus::BlowupDetected;
                }
            }
            StepAttempt::Rejected(_) => {
                rejected += 1;
                dt = T::half() * step;
            }
        }
    };

    if snapshots.last().map(|s| s.t) != Some(state.t) {
        push_snapshot(&mut snapshots, &state, model, grid, last_dt)?;
    }
    Ok(RunOutcome {
        status,
        blowup_time_estimate: (status == RunStatus::BlowupDetected).then_some(state.t),
        final_state: state,
        snapshots,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

fn push_snapshot<T: Scalar>(
    snapshots: &mut Vec<FunctionalSnapshot<T>>,
    state: &State<T>,
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
    dt: T,
) -> Result<()> {
    let prev = snapshots.last().expect("initial snapshot is always present");
    let mut snap = evaluate_snapshot(state, model, grid, dt, prev.cumulative_vt2)?;
    let width = snap.t - prev.t;
    snap.cumulative_vt2 = prev.cumulative_vt2
        + T::half() * width * (prev.vt_l2 * prev.vt_l2 + snap.vt_l2 * snap.vt_l2);
    snapshots.push(snap);
    Ok(())
}
