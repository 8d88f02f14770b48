//! Post-processing of snapshot series: discrete identity residuals, energy
//! bookkeeping and linear growth envelopes.
//!
//! Time derivatives of functionals are centered differences between
//! consecutive snapshots, paired with the trapezoidal mean of the rates.

use serde::Serialize;

use crate::functionals::FunctionalSnapshot;
use crate::scalar::Scalar;

/// Residuals over one sampling interval `[t_k, t_{k+1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalResidual<T> {
    pub t_start: T,
    pub t_end: T,
    /// `ΔF/Δt + (D_k + D_{k+1})/2 - (R_k + R_{k+1})/2`.
    pub f_identity: T,
    /// `ΔL/Δt + (diss_k + diss_{k+1})/2`.
    pub l_identity: T,
}

pub fn interval_residuals<T: Scalar>(snapshots: &[FunctionalSnapshot<T>]) -> Vec<IntervalResidual<T>> {
    snapshots
        .windows(2)
        .filter(|w| w[1].t > w[0].t)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let dt = b.t - a.t;
            let half = T::half();
            IntervalResidual {
                t_start: a.t,
                t_end: b.t,
                f_identity: (b.f_general - a.f_general) / dt + half * (a.d_dissipation + b.d_dissipation)
                    - half * (a.r_rate + b.r_rate),
                l_identity: (b.l_classical - a.l_classical) / dt
                    + half * (a.l_dissipation + b.l_dissipation),
            }
        })
        .collect()
}

/// Identity residuals aligned with `snapshots`: entry `k` belongs to the
/// interval ending at snapshot `k`, and is zero for `k = 0` and for repeated
/// sample times.
pub fn aligned_residuals<T: Scalar>(snapshots: &[FunctionalSnapshot<T>]) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(snapshots.len());
    if !snapshots.is_empty() {
        out.push((T::zero(), T::zero()));
    }
    for w in snapshots.windows(2) {
        out.push(match interval_residuals(w).first() {
            Some(r) => (r.f_identity, r.l_identity),
            None => (T::zero(), T::zero()),
        });
    }
    out
}

/// Cumulative trapezoidal integral of `ys` over `ts`, starting from zero.
pub fn cumulative_trapezoid<T: Scalar>(ts: &[T], ys: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(ts.len());
    let mut acc = T::zero();
    for k in 0..ts.len() {
        if k > 0 {
            acc = acc + T::half() * (ts[k] - ts[k - 1]) * (ys[k] + ys[k - 1]);
        }
        out.push(acc);
    }
    out
}

fn times<T: Scalar>(snapshots: &[FunctionalSnapshot<T>]) -> Vec<T> {
    snapshots.iter().map(|s| s.t).collect()
}

/// `∫₀ᵗ R` at every snapshot.
pub fn cumulative_rate<T: Scalar>(snapshots: &[FunctionalSnapshot<T>]) -> Vec<T> {
    let rates: Vec<T> = snapshots.iter().map(|s| s.r_rate).collect();
    cumulative_trapezoid(&times(snapshots), &rates)
}

/// `L(0) - L(t) - ∫₀ᵗ (∫v_t² + ∫u|(b'-v)_x|²)` at every snapshot.
pub fn energy_bookkeeping<T: Scalar>(snapshots: &[FunctionalSnapshot<T>]) -> Vec<T> {
    let Some(first) = snapshots.first() else {
        return Vec::new();
    };
    let diss: Vec<T> = snapshots.iter().map(|s| s.l_dissipation).collect();
    let cumulative = cumulative_trapezoid(&times(snapshots), &diss);
    snapshots
        .iter()
        .zip(cumulative)
        .map(|(s, c)| first.l_classical - s.l_classical - c)
        .collect()
}

/// Snapshots after which `L` increased by more than `slack·(1 + |L|)`.
pub fn l_increases<T: Scalar>(snapshots: &[FunctionalSnapshot<T>], slack: T) -> Vec<usize> {
    snapshots
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].l_classical > w[0].l_classical + slack * (T::one() + w[0].l_classical.abs()))
        .map(|(k, _)| k)
        .collect()
}

/// Smallest `C` with `y(t) ≤ C (t + 1)` at every sample.
pub fn proportional_envelope<T: Scalar>(ts: &[T], ys: &[T]) -> T {
    ts.iter()
        .zip(ys)
        .map(|(&t, &y)| y / (t + T::one()))
        .fold(T::neg_infinity(), T::max)
}

/// Line `intercept + slope·t` fitted by least squares, then raised so that
/// every sample lies on or below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearEnvelope<T> {
    pub intercept: T,
    pub slope: T,
}

impl<T: Scalar> LinearEnvelope<T> {
    pub fn fit_dominating(ts: &[T], ys: &[T]) -> Option<Self> {
        let n = T::from_count(ts.len());
        if ts.len() < 2 {
            return None;
        }
        let mean_t = ts.iter().copied().sum::<T>() / n;
        let mean_y = ys.iter().copied().sum::<T>() / n;
        let (mut sxy, mut sxx) = (T::zero(), T::zero());
        for (&t, &y) in ts.iter().zip(ys) {
            sxy = sxy + (t - mean_t) * (y - mean_y);
            sxx = sxx + (t - mean_t) * (t - mean_t);
        }
        if !(sxx > T::zero()) {
            return None;
        }
        let slope = sxy / sxx;
        let base = mean_y - slope * mean_t;
        let lift = ts
            .iter()
            .zip(ys)
            .map(|(&t, &y)| y - (base + slope * t))
            .fold(T::zero(), T::max);
        Some(Self {
            intercept: base + lift,
            slope,
        })
    }

    pub fn at(&self, t: T) -> T {
        self.intercept + self.slope * t
    }

    pub fn dominates(&self, ts: &[T], ys: &[T], tol: T) -> bool {
        ts.iter().zip(ys).all(|(&t, &y)| y <= self.at(t) + tol * (T::one() + y.abs()))
    }
}

/// Running maximum.
pub fn running_max<T: Scalar>(ys: &[T]) -> Vec<T> {
    let mut acc = T::neg_infinity();
    ys.iter()
        .map(|&y| {
            acc = acc.max(y);
            acc
        })
        .collect()
}

/// Growth envelopes reported for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthEnvelopes<T> {
    /// `C` in `∫₀ᵗ R ≤ C (t + 1)`.
    pub r_cumulative: T,
    /// Dominating line for the running maximum of `entropy + G`.
    pub entropy_plus_g: Option<LinearEnvelope<T>>,
}

pub fn growth_envelopes<T: Scalar>(snapshots: &[FunctionalSnapshot<T>]) -> GrowthEnvelopes<T> {
    let ts = times(snapshots);
    let cum = cumulative_rate(snapshots);
    let eg: Vec<T> = snapshots.iter().map(|s| s.entropy + s.grad_weight).collect();
    GrowthEnvelopes {
        r_cumulative: proportional_envelope(&ts, &cum),
        entropy_plus_g: LinearEnvelope::fit_dominating(&ts, &running_max(&eg)),
    }
}

/// Largest absolute residuals of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualMaxima<T> {
    pub f_identity: T,
    pub l_identity: T,
    pub energy_bookkeeping: T,
    pub mass_drift: T,
    /// Most negative value of each gap (`None` off the critical exponent).
    pub prop41_gap_min: Option<T>,
    pub regest3_gap_min: Option<T>,
    pub quarter_coefficient_gap_min: Option<T>,
}

pub fn residual_maxima<T: Scalar>(snapshots: &[FunctionalSnapshot<T>]) -> ResidualMaxima<T> {
    let intervals = interval_residuals(snapshots);
    let max_abs = |it: &mut dyn Iterator<Item = T>| it.map(|x| x.abs()).fold(T::zero(), T::max);
    let min_of = |f: fn(&FunctionalSnapshot<T>) -> Option<T>| {
        snapshots
            .iter()
            .filter_map(f)
            .fold(None, |acc: Option<T>, x| Some(acc.map_or(x, |a| a.min(x))))
    };
    let m0 = snapshots.first().map_or(T::one(), |s| s.mass);
    ResidualMaxima {
        f_identity: max_abs(&mut intervals.iter().map(|r| r.f_identity)),
        l_identity: max_abs(&mut intervals.iter().map(|r| r.l_identity)),
        energy_bookkeeping: max_abs(&mut energy_bookkeeping(snapshots).into_iter()),
        mass_drift: max_abs(&mut snapshots.iter().map(|s| (s.mass - m0) / m0)),
        prop41_gap_min: min_of(|s| s.prop41_gap),
        regest3_gap_min: min_of(|s| s.regest3_gap),
        quarter_coefficient_gap_min: min_of(|s| s.quarter_coefficient_gap),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let ts = [0.0, 0.5, 1.5, 2.0];
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t + 1.0).collect();
        let c = cumulative_trapezoid(&ts, &ys);
        for (t, v) in ts.iter().zip(c) {
            assert_relative_eq!(v, 1.5 * t * t + t, max_relative = 1e-15);
        }
    }

    #[test]
    fn proportional_envelope_is_tight() {
        let ts = [0.0, 1.0, 3.0];
        let ys = [0.5, 3.0, 4.0];
        assert_eq!(proportional_envelope(&ts, &ys), 1.5);
    }

    #[test]
    fn linear_envelope_dominates_samples() {
        let ts = [0.0f64, 1.0, 2.0, 3.0];
        let ys = [1.0f64, 2.5, 2.9, 4.2];
        let e = LinearEnvelope::fit_dominating(&ts, &ys).unwrap();
        assert!(e.dominates(&ts, &ys, 0.0));
        assert!(ts.iter().zip(&ys).any(|(&t, &y)| (e.at(t) - y).abs() < 1e-12));
        assert!(LinearEnvelope::fit_dominating(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn running_max_is_monotone() {
        assert_eq!(running_max(&[1.0, 0.0, 2.0, 1.5]), vec![1.0, 1.0, 2.0, 2.0]);
    }
}
