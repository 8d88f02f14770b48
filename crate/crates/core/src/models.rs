//! The diffusion law `a(u) = (1+u)^(-p)` and its primitives.
//!
//! Three primitives are exposed besides `a` and `a'`:
//!
//! * `B(u) = ∫₁ᵘ a(r) dr`, the diffusion integral (closed form for every `p`);
//! * `b'(u) = ∫₁ᵘ a(r)/r dr` and `b(u) = ∫₁ᵘ b'(s) ds`, the Lyapunov density
//!   and its slope, normalized by `b(1) = b'(1) = 0`.
//!
//! `b` and `b'` have closed forms for `p = 0` and `p = 1`. Other exponents go
//! through adaptive quadrature in the logarithmic variable `s = ln r`, which
//! removes the `1/r` singularity; trajectory evaluations read a log-spaced
//! table of node values and integrate only the short remainder.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::scalar::Scalar;

/// Densities below this value are clamped before evaluating `b'`, `b` or any
/// `1/u` weight.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Default relative tolerance for quadrature-backed primitives.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;

/// Table nodes per decade of `u`.
const TABLE_NODES_PER_DECADE: usize = 16;
/// Decades covered on each side of `u = 1`.
const TABLE_DECADES: usize = 12;

/// Clamps a density to [`DENSITY_FLOOR`]; the flag reports whether it moved.
#[inline]
pub fn floor_density<T: Scalar>(u: T) -> (T, bool) {
    let floor = T::lit(DENSITY_FLOOR);
    if u < floor {
        (floor, true)
    } else {
        (u, false)
    }
}

/// Power-law diffusion `a(u) = (1+u)^(-p)`.
#[derive(Debug, Clone)]
pub struct DiffusionModel<T: Scalar> {
    exponent: T,
    quadrature_tol: T,
    table: OnceLock<Result<PrimitiveTable<T>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClosedForm {
    Linear,
    Critical,
    None,
}

impl<T: Scalar> DiffusionModel<T> {
    pub fn new(exponent: T, quadrature_tol: T) -> Result<Self> {
        if !exponent.is_finite() || exponent < T::zero() {
            return Err(Error::InvalidParameter {
                key: "p",
                reason: format!("exponent must be finite and nonnegative, got {exponent}"),
            });
        }
        if !(quadrature_tol > T::zero() && quadrature_tol < T::one()) {
            return Err(Error::InvalidParameter {
                key: "quadrature_tol",
                reason: format!("tolerance must lie in (0, 1), got {quadrature_tol}"),
            });
        }
        Ok(Self {
            exponent,
            quadrature_tol,
            table: OnceLock::new(),
        })
    }

    /// Model with exponent `p` and the default quadrature tolerance.
    pub fn with_exponent(exponent: T) -> Result<Self> {
        Self::new(exponent, T::lit(DEFAULT_QUADRATURE_TOL))
    }

    /// The critical law `a(u) = 1/(1+u)`.
    pub fn critical() -> Self {
        Self::with_exponent(T::one()).expect("p = 1 is valid")
    }

    pub fn exponent(&self) -> T {
        self.exponent
    }

    pub fn quadrature_tol(&self) -> T {
        self.quadrature_tol
    }

    pub fn is_critical(&self) -> bool {
        self.exponent == T::one()
    }

    fn closed_form(&self) -> ClosedForm {
        if self.exponent == T::zero() {
            ClosedForm::Linear
        } else if self.exponent == T::one() {
            ClosedForm::Critical
        } else {
            ClosedForm::None
        }
    }

    /// `a(u)` without domain checks, for inner loops over valid states.
    #[inline]
    pub fn diffusivity_raw(&self, u: T) -> T {
        match self.closed_form() {
            ClosedForm::Linear => T::one(),
            ClosedForm::Critical => (T::one() + u).recip(),
            ClosedForm::None => (T::one() + u).powf(-self.exponent),
        }
    }

    /// `a(u) = (1+u)^(-p)` for `u ≥ 0`.
    pub fn diffusivity(&self, u: T) -> Result<T> {
        check_nonnegative("a", u)?;
        Ok(self.diffusivity_raw(u))
    }

    /// `a'(u) = -p (1+u)^(-p-1)` for `u ≥ 0`.
    pub fn diffusivity_slope(&self, u: T) -> Result<T> {
        check_nonnegative("a'", u)?;
        Ok(-self.exponent * (T::one() + u).powf(-self.exponent - T::one()))
    }

    /// `B(u) = ∫₁ᵘ a(r) dr` for `u > 0`; negative below `u = 1`.
    pub fn diffusivity_integral(&self, u: T) -> Result<T> {
        check_positive("B", u)?;
        let half_shift = ((T::one() + u) * T::half()).ln();
        Ok(match self.closed_form() {
            ClosedForm::Linear => u - T::one(),
            ClosedForm::Critical => half_shift,
            ClosedForm::None => {
                // ((1+u)^q - 2^q)/q with q = 1-p, written to avoid cancellation near q = 0
                let q = T::one() - self.exponent;
                T::two().powf(q) * (q * half_shift).exp_m1() / q
            }
        })
    }

    /// `b'(u) = ∫₁ᵘ a(r)/r dr` for `u > 0`. Arguments below [`DENSITY_FLOOR`]
    /// are evaluated at the floor.
    pub fn lyapunov_density_slope(&self, u: T) -> Result<T> {
        check_positive("b'", u)?;
        let (u, _) = floor_density(u);
        match self.closed_form() {
            ClosedForm::Linear => Ok(u.ln()),
            ClosedForm::Critical => Ok((T::two() * u / (T::one() + u)).ln()),
            ClosedForm::None => self.table()?.slope(self, u),
        }
    }

    /// `b(u)` with `b'' = a/u` and `b(1) = b'(1) = 0`, for `u > 0`.
    pub fn lyapunov_density(&self, u: T) -> Result<T> {
        check_positive("b", u)?;
        let (u, _) = floor_density(u);
        match self.closed_form() {
            ClosedForm::Linear => Ok(u * u.ln() - u + T::one()),
            ClosedForm::Critical => {
                let w = T::one() + u;
                Ok(u * u.ln() - w * (w * T::half()).ln())
            }
            ClosedForm::None => self.table()?.value(self, u),
        }
    }

    /// `B(u)` by direct quadrature, independent of the closed form.
    pub fn diffusivity_integral_quadrature(&self, u: T) -> Result<T> {
        check_positive("B", u)?;
        integrate(
            |s: T| {
                let r = s.exp();
                r * self.diffusivity_raw(r)
            },
            T::zero(),
            u.ln(),
            self.quadrature_tol,
        )
    }

    /// `b'(u)` by direct quadrature from `u = 1`, bypassing closed forms and
    /// the table.
    pub fn lyapunov_density_slope_quadrature(&self, u: T) -> Result<T> {
        check_positive("b'", u)?;
        let (u, _) = floor_density(u);
        integrate(
            |s: T| self.diffusivity_raw(s.exp()),
            T::zero(),
            u.ln(),
            self.quadrature_tol,
        )
    }

    /// `b(u) = ∫₁ᵘ (u - r) a(r)/r dr` by direct quadrature.
    pub fn lyapunov_density_quadrature(&self, u: T) -> Result<T> {
        check_positive("b", u)?;
        let (u, _) = floor_density(u);
        integrate(
            |s: T| {
                let r = s.exp();
                (u - r) * self.diffusivity_raw(r)
            },
            T::zero(),
            u.ln(),
            self.quadrature_tol,
        )
    }

    fn table(&self) -> Result<&PrimitiveTable<T>> {
        self.table
            .get_or_init(|| PrimitiveTable::build(self))
            .as_ref()
            .map_err(Clone::clone)
    }
}

fn check_nonnegative<T: Scalar>(what: &'static str, u: T) -> Result<()> {
    if u.is_finite() && u >= T::zero() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: u.as_f64(),
        })
    }
}

fn check_positive<T: Scalar>(what: &'static str, u: T) -> Result<()> {
    if u.is_finite() && u > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: u.as_f64(),
        })
    }
}

/// Node values of `b'` and `b` at `u_k = exp(k h)`, `|k| ≤ K`.
#[derive(Debug, Clone)]
struct PrimitiveTable<T> {
    step: T,
    half_width: i64,
    slopes: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> PrimitiveTable<T> {
    fn build(model: &DiffusionModel<T>) -> Result<Self> {
        let step = T::LN_10() / T::from_count(TABLE_NODES_PER_DECADE);
        let k_max = (TABLE_NODES_PER_DECADE * TABLE_DECADES) as i64;
        let len = (2 * k_max + 1) as usize;
        let mut slopes = vec![T::zero(); len];
        let mut values = vec![T::zero(); len];
        let tol = model.quadrature_tol;
        let node = |k: i64| T::from_i64(k).expect("table index") * step;

        for dir in [1i64, -1] {
            let mut k = 0i64;
            while k.abs() < k_max {
                let (s0, s1) = (node(k), node(k + dir));
                let (i0, i1) = ((k + k_max) as usize, (k + dir + k_max) as usize);
                let u1 = s1.exp();
                let d_slope = integrate(|s: T| model.diffusivity_raw(s.exp()), s0, s1, tol)?;
                let remainder = integrate(
                    |s: T| {
                        let r = s.exp();
                        (u1 - r) * model.diffusivity_raw(r)
                    },
                    s0,
                    s1,
                    tol,
                )?;
                slopes[i1] = slopes[i0] + d_slope;
                values[i1] = values[i0] + slopes[i0] * (u1 - s0.exp()) + remainder;
                k += dir;
            }
        }
        Ok(Self {
            step,
            half_width: k_max,
            slopes,
            values,
        })
    }

    /// Nearest node to `ln u`, if inside the table.
    fn nearest(&self, u: T) -> Option<(usize, T)> {
        let s = u.ln();
        let k = (s / self.step).round().to_i64()?;
        if k.abs() > self.half_width {
            return None;
        }
        let s_k = T::from_i64(k)? * self.step;
        Some(((k + self.half_width) as usize, s_k))
    }

    fn slope(&self, model: &DiffusionModel<T>, u: T) -> Result<T> {
        let Some((i, s_k)) = self.nearest(u) else {
            return model.lyapunov_density_slope_quadrature(u);
        };
        let tail = integrate(
            |s: T| model.diffusivity_raw(s.exp()),
            s_k,
            u.ln(),
            model.quadrature_tol,
        )?;
        Ok(self.slopes[i] + tail)
    }

    fn value(&self, model: &DiffusionModel<T>, u: T) -> Result<T> {
        let Some((i, s_k)) = self.nearest(u) else {
            return model.lyapunov_density_quadrature(u);
        };
        let tail = integrate(
            |s: T| {
                let r = s.exp();
                (u - r) * model.diffusivity_raw(r)
            },
            s_k,
            u.ln(),
            model.quadrature_tol,
        )?;
        Ok(self.values[i] + self.slopes[i] * (u - s_k.exp()) + tail)
    }
}
