//! Functionals monitored along trajectories.
//!
//! Cell integrals use the midpoint rule. Gradient-weighted integrals run over
//! interior faces with the arithmetic face average `ū_j`,
//! `Σ_j w(ū_j)·((u_j - u_{j-1})/dx)²·dx`, which is the stencil of the flux.
//!
//! Densities below [`DENSITY_FLOOR`](crate::models::DENSITY_FLOOR) are clamped
//! wherever a `1/u` weight or a logarithm of `u` appears.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, State};
use crate::models::{floor_density, DiffusionModel};
use crate::operators::{face_gradient, vt_field, FaceField};
use crate::scalar::{neumaier_sum, Scalar};

/// Snapshots whose minimum density falls below this value are flagged.
pub const VACUUM_FLAG_THRESHOLD: f64 = 1e-10;

/// All monitored quantities at one time instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalSnapshot<T> {
    pub t: T,
    pub dt_current: T,
    pub mass: T,
    pub sup_u: T,
    pub min_u: T,
    pub min_v: T,
    /// `∫ u log(1+u)`.
    pub entropy: T,
    /// `∫ a(u)²/u |u_x|²`.
    pub grad_weight: T,
    pub l_classical: T,
    pub l_dissipation: T,
    pub f_general: T,
    /// Critical-case form of the gradient functional; `None` unless `p = 1`.
    pub f_critical: Option<T>,
    pub d_dissipation: T,
    pub r_rate: T,
    pub prop41_gap: Option<T>,
    pub regest3_gap: Option<T>,
    /// Entropy bound with the `¼ √G` coefficient, recorded only.
    pub quarter_coefficient_gap: Option<T>,
    /// `∫ (1+u)³`.
    pub cube_norm: T,
    pub v_l2: T,
    pub vt_l2: T,
    /// `∫₀ᵗ ∫ v_t²`, trapezoidal over the snapshot series.
    pub cumulative_vt2: T,
    pub vacuum_flag: bool,
}

/// Quantities entering the Gagliardo–Nirenberg type inequality
/// `‖w‖⁴_{L⁴} ≤ δ ‖w‖²_{H¹} ∫|w log w| + C_δ ‖w‖_{L¹}`, for inspection only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolationTerms<T> {
    pub l4_pow4: T,
    pub h1_sq: T,
    pub abs_u_log_u: T,
    pub l1: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxiliaryMonitors<T> {
    pub cube_norm: T,
    pub entropy: T,
    pub v_l2: T,
    pub vt_l2: T,
    pub interpolation: InterpolationTerms<T>,
}

/// Density clamped at the floor, with a flag when any cell moved.
struct Clamped<T> {
    u: Vec<T>,
    clamped: bool,
}

impl<T: Scalar> Clamped<T> {
    fn new(u: &[T]) -> Self {
        let mut clamped = false;
        let u = u
            .iter()
            .map(|&x| {
                let (y, c) = floor_density(x);
                clamped |= c;
                y
            })
            .collect();
        Self { u, clamped }
    }
}

fn require_critical<T: Scalar>(model: &DiffusionModel<T>, what: &str) -> Result<()> {
    if model.is_critical() {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "{what} is defined only for p = 1 (model has p = {})",
            model.exponent()
        )))
    }
}

/// `Σ u_i dx`.
pub fn mass<T: Scalar>(u: &[T], grid: &Grid<T>) -> T {
    grid.integrate_cells(u.iter().copied())
}

/// `Σ_faces w(ū_j)·grad_j²·dx` over interior faces.
fn face_weighted<T: Scalar>(u: &[T], grid: &Grid<T>, weight: impl Fn(T) -> T) -> T {
    let inv_dx = grid.dx().recip();
    let terms = u.windows(2).map(|p| {
        let ubar = T::half() * (p[0] + p[1]);
        let g = (p[1] - p[0]) * inv_dx;
        weight(ubar) * g * g
    });
    neumaier_sum(terms) * grid.dx()
}

/// `G = ∫ a(u)²/u |u_x|²` (for `p = 1`, `∫ |u_x|²/(u(1+u)²)`).
pub fn gradient_weight<T: Scalar>(u: &[T], model: &DiffusionModel<T>, grid: &Grid<T>) -> T {
    let c = Clamped::new(u);
    face_weighted(&c.u, grid, |ub| {
        let a = model.diffusivity_raw(ub);
        a * a / ub
    })
}

/// `∫ u log(1+u)`.
pub fn entropy<T: Scalar>(u: &[T], grid: &Grid<T>) -> T {
    grid.integrate_cells(u.iter().map(|&x| x * x.ln_1p()))
}

fn h1_sq<T: Scalar>(w: &[T], grid: &Grid<T>) -> Result<T> {
    let g = face_gradient(w, grid)?;
    Ok(grid.integrate_cells(w.iter().map(|&x| x * x))
        + grid.integrate_cells(g.interior().iter().map(|&x| x * x)))
}

/// `L = ∫ b(u) - ∫ uv + ½‖v‖²_{H¹}`.
pub fn classical_l<T: Scalar>(state: &State<T>, model: &DiffusionModel<T>, grid: &Grid<T>) -> Result<T> {
    state.validate(grid)?;
    let c = Clamped::new(&state.u);
    let b: Vec<T> = c
        .u
        .iter()
        .map(|&x| model.lyapunov_density(x))
        .collect::<Result<_>>()?;
    let coupling = grid.integrate_cells(state.u.iter().zip(&state.v).map(|(&u, &v)| u * v));
    Ok(grid.integrate_cells(b) - coupling + T::half() * h1_sq(&state.v, grid)?)
}

/// `∫ v_t² + ∫ u |(b'(u) - v)_x|²`, the dissipation of `L`.
pub fn classical_dissipation<T: Scalar>(
    state: &State<T>,
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
) -> Result<T> {
    let vt = vt_field(state, grid)?;
    classical_dissipation_with(state, &vt, model, grid)
}

fn classical_dissipation_with<T: Scalar>(
    state: &State<T>,
    vt: &[T],
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
) -> Result<T> {
    let c = Clamped::new(&state.u);
    let potential: Vec<T> = c
        .u
        .iter()
        .zip(&state.v)
        .map(|(&u, &v)| model.lyapunov_density_slope(u).map(|s| s - v))
        .collect::<Result<_>>()?;
    let inv_dx = grid.dx().recip();
    let transport = neumaier_sum((1..state.u.len()).map(|j| {
        let ubar = T::half() * (state.u[j - 1] + state.u[j]);
        let g = (potential[j] - potential[j - 1]) * inv_dx;
        ubar * g * g
    })) * grid.dx();
    Ok(grid.integrate_cells(vt.iter().map(|&x| x * x)) + transport)
}

/// `½ ∫ a(u)²/u |u_x|² - ∫ u B(u)`.
pub fn f_general<T: Scalar>(state: &State<T>, model: &DiffusionModel<T>, grid: &Grid<T>) -> Result<T> {
    state.validate(grid)?;
    let c = Clamped::new(&state.u);
    let g = face_weighted(&c.u, grid, |ub| {
        let a = model.diffusivity_raw(ub);
        a * a / ub
    });
    let potential: Vec<T> = c
        .u
        .iter()
        .map(|&u| model.diffusivity_integral(u).map(|b| u * b))
        .collect::<Result<_>>()?;
    Ok(T::half() * g - grid.integrate_cells(potential))
}

/// `½ ∫ |u_x|²/(u(1+u)²) - ∫ u log(1+u)`; requires `p = 1`.
pub fn f_critical<T: Scalar>(state: &State<T>, model: &DiffusionModel<T>, grid: &Grid<T>) -> Result<T> {
    require_critical(model, "F_critical")?;
    state.validate(grid)?;
    let c = Clamped::new(&state.u);
    Ok(T::half() * critical_weight(&c.u, grid) - entropy(&c.u, grid))
}

fn critical_weight<T: Scalar>(u: &[T], grid: &Grid<T>) -> T {
    face_weighted(u, grid, |ub| {
        let w = T::one() + ub;
        (ub * w * w).recip()
    })
}

/// Cell residual `Q_i = div((a(ū)/ū) u_x)_i - Δv_i + (v_i + v_t,i)/2`.
fn d_residual<T: Scalar>(
    state: &State<T>,
    vt: &[T],
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
) -> Result<Vec<T>> {
    let c = Clamped::new(&state.u);
    let inv_dx = grid.dx().recip();
    let n = state.u.len();
    let mut w = vec![T::zero(); n + 1];
    for (wj, pair) in w[1..n].iter_mut().zip(c.u.windows(2)) {
        let ubar = T::half() * (pair[0] + pair[1]);
        *wj = model.diffusivity_raw(ubar) / ubar * (pair[1] - pair[0]) * inv_dx;
    }
    let div_w = FaceField(w).divergence(grid);
    let lap_v = face_gradient(&state.v, grid)?.divergence(grid);
    Ok((0..n)
        .map(|i| div_w[i] - lap_v[i] + T::half() * (state.v[i] + vt[i]))
        .collect())
}

/// `∫ u a(u) |Q|²`, the dissipation of the gradient functional.
pub fn d_dissipation<T: Scalar>(state: &State<T>, model: &DiffusionModel<T>, grid: &Grid<T>) -> Result<T> {
    let vt = vt_field(state, grid)?;
    d_dissipation_with(state, &vt, model, grid)
}

fn d_dissipation_with<T: Scalar>(
    state: &State<T>,
    vt: &[T],
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
) -> Result<T> {
    let q = d_residual(state, vt, model, grid)?;
    Ok(grid.integrate_cells(
        state
            .u
            .iter()
            .zip(&q)
            .map(|(&u, &q)| u * model.diffusivity_raw(u) * q * q),
    ))
}

/// `∫ u a(u) (v + v_t)²/4`, the growth rate of the gradient functional.
pub fn r_rate<T: Scalar>(state: &State<T>, model: &DiffusionModel<T>, grid: &Grid<T>) -> Result<T> {
    let vt = vt_field(state, grid)?;
    Ok(r_rate_with(state, &vt, model, grid))
}

fn r_rate_with<T: Scalar>(state: &State<T>, vt: &[T], model: &DiffusionModel<T>, grid: &Grid<T>) -> T {
    grid.integrate_cells(state.u.iter().zip(&state.v).zip(vt).map(|((&u, &v), &vt)| {
        let s = T::half() * (v + vt);
        u * model.diffusivity_raw(u) * s * s
    }))
}

/// `M³ + M log(1+M)`.
pub fn lower_bound_constant<T: Scalar>(mass: T) -> T {
    mass * mass * mass + mass * mass.ln_1p()
}

/// `F_critical - ¼G + M³ + M log(1+M)`, nonnegative for exact solutions.
pub fn prop41_gap<T: Scalar>(state: &State<T>, model: &DiffusionModel<T>, grid: &Grid<T>) -> Result<T> {
    let f = f_critical(state, model, grid)?;
    let c = Clamped::new(&state.u);
    let g = critical_weight(&c.u, grid);
    Ok(f - T::lit(0.25) * g + lower_bound_constant(mass(&state.u, grid)))
}

/// `M^{3/2} √G + M log(1+M) - ∫ u log(1+u)`, the Cauchy–Schwarz entropy bound.
pub fn regest3_gap<T: Scalar>(state: &State<T>, model: &DiffusionModel<T>, grid: &Grid<T>) -> Result<T> {
    require_critical(model, "regest3_gap")?;
    state.validate(grid)?;
    let c = Clamped::new(&state.u);
    let m = mass(&state.u, grid);
    Ok(entropy_bound(m, critical_weight(&c.u, grid)) - entropy(&state.u, grid))
}

fn entropy_bound<T: Scalar>(m: T, g: T) -> T {
    m * m.sqrt() * g.sqrt() + m * m.ln_1p()
}

/// Cube norm, entropy, `‖v‖_{L²}`, `‖v_t‖_{L²}` and the interpolation terms.
pub fn auxiliary_monitors<T: Scalar>(state: &State<T>, grid: &Grid<T>) -> Result<AuxiliaryMonitors<T>> {
    let vt = vt_field(state, grid)?;
    auxiliary_with(state, &vt, grid)
}

fn auxiliary_with<T: Scalar>(state: &State<T>, vt: &[T], grid: &Grid<T>) -> Result<AuxiliaryMonitors<T>> {
    let u = &state.u;
    let cube_norm = grid.integrate_cells(u.iter().map(|&x| {
        let w = T::one() + x;
        w * w * w
    }));
    let interpolation = InterpolationTerms {
        l4_pow4: grid.integrate_cells(u.iter().map(|&x| x * x * x * x)),
        h1_sq: h1_sq(u, grid)?,
        abs_u_log_u: grid.integrate_cells(u.iter().map(|&x| {
            if x > T::zero() {
                (x * x.ln()).abs()
            } else {
                T::zero()
            }
        })),
        l1: grid.integrate_cells(u.iter().map(|&x| x.abs())),
    };
    Ok(AuxiliaryMonitors {
        cube_norm,
        entropy: entropy(u, grid),
        v_l2: grid.integrate_cells(state.v.iter().map(|&x| x * x)).sqrt(),
        vt_l2: grid.integrate_cells(vt.iter().map(|&x| x * x)).sqrt(),
        interpolation,
    })
}

/// Evaluates every monitored functional at `state`. `dt_current` and
/// `cumulative_vt2` are bookkeeping supplied by the caller.
pub fn evaluate_snapshot<T: Scalar>(
    state: &State<T>,
    model: &DiffusionModel<T>,
    grid: &Grid<T>,
    dt_current: T,
    cumulative_vt2: T,
) -> Result<FunctionalSnapshot<T>> {
    state.validate(grid)?;
    let vt = vt_field(state, grid)?;
    let clamped = Clamped::new(&state.u);
    let m = mass(&state.u, grid);
    let aux = auxiliary_with(state, &vt, grid)?;
    let grad_weight = gradient_weight(&state.u, model, grid);
    let min_u = state.min_u();
    let (f_critical, prop41, regest3, quarter) = if model.is_critical() {
        let g = critical_weight(&clamped.u, grid);
        let f = T::half() * g - entropy(&clamped.u, grid);
        (
            Some(f),
            Some(f - T::lit(0.25) * g + lower_bound_constant(m)),
            Some(entropy_bound(m, g) - aux.entropy),
            Some(lower_bound_constant(m) + T::lit(0.25) * g.sqrt() - aux.entropy),
        )
    } else {
        (None, None, None, None)
    };
    Ok(FunctionalSnapshot {
        t: state.t,
        dt_current,
        mass: m,
        sup_u: state.sup_u(),
        min_u,
        min_v: state.min_v(),
        entropy: aux.entropy,
        grad_weight,
        l_classical: classical_l(state, model, grid)?,
        l_dissipation: classical_dissipation_with(state, &vt, model, grid)?,
        f_general: f_general(state, model, grid)?,
        f_critical,
        d_dissipation: d_dissipation_with(state, &vt, model, grid)?,
        r_rate: r_rate_with(state, &vt, model, grid),
        prop41_gap: prop41,
        regest3_gap: regest3,
        quarter_coefficient_gap: quarter,
        cube_norm: aux.cube_norm,
        v_l2: aux.v_l2,
        vt_l2: aux.vt_l2,
        cumulative_vt2,
        vacuum_flag: clamped.clamped || min_u < T::lit(VACUUM_FLAG_THRESHOLD),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;

    const LN2: f64 = std::f64::consts::LN_2;

    fn setup(n: usize) -> (Grid<f64>, DiffusionModel<f64>) {
        (make_grid(n).unwrap(), DiffusionModel::critical())
    }

    #[test]
    fn mass_examples() {
        let (g, _) = setup(4);
        assert_eq!(mass(&[2.0; 4], &g), 2.0);
        assert_eq!(mass(&[4.0, 0.0, 0.0, 0.0], &g), 1.0);
    }

    #[test]
    fn classical_l_examples() {
        let (g, m) = setup(16);
        assert_relative_eq!(classical_l(&State::uniform(&g, 1.0, 1.0), &m, &g).unwrap(), -0.5);
        assert_eq!(classical_l(&State::uniform(&g, 1.0, 0.0), &m, &g).unwrap(), 0.0);
        assert_relative_eq!(
            classical_l(&State::uniform(&g, 3.0, 0.0), &m, &g).unwrap(),
            0.523_248_143_764_547_8,
            max_relative = 1e-13
        );
    }

    #[test]
    fn classical_dissipation_examples() {
        let (g, m) = setup(16);
        // b'(c) - c constant and v_t = 0 at a constant steady state
        assert_eq!(classical_dissipation(&State::uniform(&g, 2.0, 2.0), &m, &g).unwrap(), 0.0);
        assert_relative_eq!(
            classical_dissipation(&State::uniform(&g, 3.0, 0.0), &m, &g).unwrap(),
            9.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn gradient_functional_examples() {
        let (g, m) = setup(16);
        let one = State::uniform(&g, 1.0, 1.0);
        assert_eq!(f_general(&one, &m, &g).unwrap(), 0.0);
        assert_relative_eq!(f_critical(&one, &m, &g).unwrap(), -LN2, max_relative = 1e-15);
        let three = State::uniform(&g, 3.0, 0.0);
        assert_relative_eq!(f_general(&three, &m, &g).unwrap(), -3.0 * LN2, max_relative = 1e-14);
        let sub = DiffusionModel::with_exponent(0.5).unwrap();
        assert!(matches!(f_critical(&one, &sub, &g), Err(Error::Usage(_))));
    }

    #[test]
    fn dissipation_and_rate_at_equilibrium() {
        let (g, m) = setup(32);
        let s = State::uniform(&g, 1.0, 1.0);
        assert_relative_eq!(d_dissipation(&s, &m, &g).unwrap(), 0.125, max_relative = 1e-15);
        assert_relative_eq!(r_rate(&s, &m, &g).unwrap(), 0.125, max_relative = 1e-15);
        let c = 2.5;
        let s = State::uniform(&g, c, c);
        let expected = c * c * c / (4.0 * (1.0 + c));
        assert_relative_eq!(d_dissipation(&s, &m, &g).unwrap(), expected, max_relative = 1e-14);
        assert_relative_eq!(r_rate(&s, &m, &g).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn dissipation_with_unit_vt() {
        // (u, v) = (1, 0) gives v_t = 1 and Q = ½
        let (g, m) = setup(8);
        let s = State::uniform(&g, 1.0, 0.0);
        assert_relative_eq!(d_dissipation(&s, &m, &g).unwrap(), 0.125, max_relative = 1e-15);
        // u a(u) = 2/3 and (v + v_t)/2 = 1
        assert_relative_eq!(r_rate(&State::uniform(&g, 2.0, 0.0), &m, &g).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        let zero = State::new(0.0, vec![0.0; 8], vec![0.0; 8]);
        assert_eq!(r_rate(&zero, &m, &g).unwrap(), 0.0);
    }

    #[test]
    fn gap_examples() {
        let (g, m) = setup(16);
        let one = State::uniform(&g, 1.0, 1.0);
        assert_relative_eq!(prop41_gap(&one, &m, &g).unwrap(), 1.0, max_relative = 1e-12);
        let three = State::uniform(&g, 3.0, 3.0);
        assert_relative_eq!(prop41_gap(&three, &m, &g).unwrap(), 27.0, max_relative = 1e-12);
        assert!(regest3_gap(&three, &m, &g).unwrap().abs() < 1e-13);
        let sub = DiffusionModel::with_exponent(2.0).unwrap();
        assert!(prop41_gap(&one, &sub, &g).is_err());
        assert!(regest3_gap(&one, &sub, &g).is_err());
    }

    #[test]
    fn vacuum_cells_are_clamped_and_flagged() {
        let (g, m) = setup(4);
        let s = State::new(0.0, vec![4.0, 0.0, 0.0, 0.0], vec![0.0; 4]);
        let gap = regest3_gap(&s, &m, &g).unwrap();
        assert!(gap.is_finite() && gap > 0.0);
        let snap = evaluate_snapshot(&s, &m, &g, 0.0, 0.0).unwrap();
        assert!(snap.vacuum_flag);
        assert!(snap.l_classical.is_finite());
        assert!(snap.f_general.is_finite());
        assert!(!evaluate_snapshot(&State::uniform(&g, 1.0, 1.0), &m, &g, 0.0, 0.0)
            .unwrap()
            .vacuum_flag);
    }

    #[test]
    fn auxiliary_examples() {
        let (g, _) = setup(8);
        let a = auxiliary_monitors(&State::uniform(&g, 1.0, 1.0), &g).unwrap();
        assert_eq!(a.cube_norm, 8.0);
        assert_relative_eq!(a.entropy, LN2, max_relative = 1e-15);
        assert_eq!(
            (a.interpolation.l4_pow4, a.interpolation.h1_sq, a.interpolation.abs_u_log_u, a.interpolation.l1),
            (1.0, 1.0, 0.0, 1.0)
        );
        let z = auxiliary_monitors(&State::uniform(&g, 0.0, 0.0), &g).unwrap();
        assert_eq!(z.cube_norm, 1.0);
        assert_eq!((z.entropy, z.v_l2, z.vt_l2), (0.0, 0.0, 0.0));
        assert_eq!(z.interpolation.l1, 0.0);
        let t = auxiliary_monitors(&State::uniform(&g, 3.0, 3.0), &g).unwrap();
        assert_relative_eq!(t.entropy, 3.0 * 4f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn snapshot_of_equilibrium() {
        let (g, m) = setup(32);
        let s = evaluate_snapshot(&State::uniform(&g, 1.0, 1.0), &m, &g, 1e-3, 0.0).unwrap();
        assert_relative_eq!(s.l_classical, -0.5);
        assert_eq!(s.l_dissipation, 0.0);
        assert_relative_eq!(s.d_dissipation, s.r_rate);
        assert_eq!(s.grad_weight, 0.0);
        assert_eq!(s.dt_current, 1e-3);
        assert!(s.prop41_gap.is_some());
        let sub = DiffusionModel::with_exponent(2.0).unwrap();
        let s = evaluate_snapshot(&State::uniform(&g, 1.0, 1.0), &sub, &g, 0.0, 0.0).unwrap();
        assert!(s.f_critical.is_none() && s.prop41_gap.is_none());
    }
}
