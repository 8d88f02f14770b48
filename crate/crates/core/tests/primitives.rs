//! Diffusion primitives against independent oracles: composite Simpson
//! quadrature in the log variable and finite differences.

use approx::assert_relative_eq;
use ks1d::DiffusionModel;
use proptest::prelude::*;

fn a(p: f64, r: f64) -> f64 {
    (1.0 + r).powf(-p)
}

/// Composite Simpson rule for `∫₀^{ln u} f(s) ds`.
fn simpson_log(u: f64, f: impl Fn(f64) -> f64) -> f64 {
    let upper = u.ln();
    let n = 20_000;
    let h = upper / n as f64;
    let mut acc = f(0.0) + f(upper);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(k as f64 * h);
    }
    acc * h / 3.0
}

fn oracle_big_b(p: f64, u: f64) -> f64 {
    simpson_log(u, |s| s.exp() * a(p, s.exp()))
}

fn oracle_slope(p: f64, u: f64) -> f64 {
    simpson_log(u, |s| a(p, s.exp()))
}

fn oracle_density(p: f64, u: f64) -> f64 {
    simpson_log(u, |s| (u - s.exp()) * a(p, s.exp()))
}

fn log_points(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (l + (h - l) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

const EXPONENTS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 3.7];

#[test]
fn primitives_match_simpson() {
    for p in EXPONENTS {
        let m = DiffusionModel::with_exponent(p).unwrap();
        for u in [1e-3, 0.02, 0.5, 1.0, 1.7, 9.0, 140.0, 1e3] {
            let scale = |x: f64| 1.0 + x.abs();
            let big_b = m.diffusivity_integral(u).unwrap();
            assert!((big_b - oracle_big_b(p, u)).abs() < 1e-10 * scale(big_b), "B p={p} u={u}");
            let slope = m.lyapunov_density_slope(u).unwrap();
            assert!((slope - oracle_slope(p, u)).abs() < 1e-10 * scale(slope), "b' p={p} u={u}");
            let b = m.lyapunov_density(u).unwrap();
            assert!((b - oracle_density(p, u)).abs() < 1e-10 * scale(b), "b p={p} u={u}");
        }
    }
}

#[test]
fn closed_forms_agree_with_quadrature() {
    for p in [0.0, 0.5, 1.0, 2.0] {
        let m = DiffusionModel::with_exponent(p).unwrap();
        for u in log_points(25, 1e-4, 1e4) {
            let scale = |x: f64| 1e-11 * (1.0 + x.abs());
            let x = m.diffusivity_integral(u).unwrap();
            assert!((x - m.diffusivity_integral_quadrature(u).unwrap()).abs() < scale(x));
            let x = m.lyapunov_density_slope(u).unwrap();
            assert!((x - m.lyapunov_density_slope_quadrature(u).unwrap()).abs() < scale(x));
            let x = m.lyapunov_density(u).unwrap();
            assert!((x - m.lyapunov_density_quadrature(u).unwrap()).abs() < scale(x));
        }
    }
}

/// Central difference of `f` at `u` taken in `s = ln u`.
fn log_derivative(f: impl Fn(f64) -> f64, u: f64) -> f64 {
    let h = 1e-4f64;
    (f(u * h.exp()) - f(u * (-h).exp())) / (u * 2.0 * h.sinh())
}

#[test]
fn derivatives_by_finite_differences() {
    // truncation is O(h²) relative; cancellation is eps·|f|/(h·|u f'|)
    for p in [0.5, 1.0, 2.0, 3.7] {
        let m = DiffusionModel::with_exponent(p).unwrap();
        for u in log_points(20, 1e-3, 1e3) {
            let big_b = |x: f64| m.diffusivity_integral(x).unwrap();
            let slope = |x: f64| m.lyapunov_density_slope(x).unwrap();
            let want = a(p, u);
            let tol = 1e-7 * want + 1e-11 * big_b(u).abs() / u;
            assert!((log_derivative(big_b, u) - want).abs() < tol, "B' p={p} u={u}");
            let want = a(p, u) / u;
            let tol = 1e-7 * want + 1e-11 * slope(u).abs() / u;
            assert!((log_derivative(slope, u) - want).abs() < tol, "b'' p={p} u={u}");
            let density = |x: f64| m.lyapunov_density(x).unwrap();
            let tol = 1e-7 * slope(u).abs() + 1e-11 * (1.0 + density(u).abs()) / u;
            assert!((log_derivative(density, u) - slope(u)).abs() < tol, "b' p={p} u={u}");
        }
    }
}

#[test]
fn anchors_at_one() {
    for p in EXPONENTS {
        let m = DiffusionModel::with_exponent(p).unwrap();
        assert_eq!(m.diffusivity(1.0).unwrap(), 2f64.powf(-p));
        assert!(m.diffusivity_integral(1.0).unwrap().abs() < 1e-15);
        assert!(m.lyapunov_density_slope(1.0).unwrap().abs() < 1e-15);
        assert!(m.lyapunov_density(1.0).unwrap().abs() < 1e-15);
    }
}

#[test]
fn single_precision_tracks_double() {
    let m32 = DiffusionModel::<f32>::with_exponent(1.0).unwrap();
    let m64 = DiffusionModel::<f64>::with_exponent(1.0).unwrap();
    for u in [0.1f32, 1.0, 3.0, 50.0] {
        assert_relative_eq!(
            m32.lyapunov_density(u).unwrap() as f64,
            m64.lyapunov_density(u as f64).unwrap(),
            max_relative = 1e-5,
            epsilon = 1e-6
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slope_is_increasing(p in 0.0f64..4.0, x in 1e-3f64..1e3, ratio in 1.001f64..10.0) {
        let m = DiffusionModel::with_exponent(p).unwrap();
        prop_assert!(m.lyapunov_density_slope(x * ratio).unwrap() > m.lyapunov_density_slope(x).unwrap());
    }

    #[test]
    fn density_is_nonnegative_and_convex(p in 0.0f64..4.0, x in 1e-3f64..1e3) {
        let m = DiffusionModel::with_exponent(p).unwrap();
        let b = |u: f64| m.lyapunov_density(u).unwrap();
        prop_assert!(b(x) >= -1e-14);
        let (l, r) = (x * 0.9, x * 1.1);
        prop_assert!(b(x) <= 0.5 * (b(l) + b(r)) + 1e-12 * (1.0 + b(x).abs()));
    }
}
