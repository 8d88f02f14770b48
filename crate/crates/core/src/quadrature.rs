//! Adaptive Gauss–Kronrod (7/15) quadrature.

// nodes and weights are quoted at their published precision
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

/// One 15-point Kronrod panel on `[a, b]`: returns the Kronrod value and
/// `|K15 - G7|` as error estimate.
pub fn kronrod15<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let center = T::half() * (a + b);
    let half = T::half() * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` (either orientation) to relative tolerance
/// `rel_tol` by globally adaptive bisection.
pub fn integrate<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, rel_tol: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let (k, e) = kronrod15(&f, a, b);
    let mut panels = vec![(a, b, k, e)];
    let mut total = k;
    let mut err = e;
    let floor = T::epsilon() * T::lit(50.0);
    loop {
        if !total.is_finite() || !err.is_finite() {
            return Err(nonconvergence(a, b, err));
        }
        if err <= rel_tol * total.abs() || err <= floor * total.abs() {
            return Ok(total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(nonconvergence(a, b, err));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| {
                if p.3 > be {
                    (i, p.3)
                } else {
                    (bi, be)
                }
            });
        let (lo, hi, k_old, e_old) = panels.swap_remove(worst);
        let mid = T::half() * (lo + hi);
        if mid == lo || mid == hi {
            // interval exhausted at working precision
            return Err(nonconvergence(a, b, err));
        }
        let (k1, e1) = kronrod15(&f, lo, mid);
        let (k2, e2) = kronrod15(&f, mid, hi);
        total = total - k_old + k1 + k2;
        err = err - e_old + e1 + e2;
        panels.push((lo, mid, k1, e1));
        panels.push((mid, hi, k2, e2));
        // re-sum periodically to shed accumulated cancellation in `err`
        if panels.len() % 64 == 0 {
            total = panels.iter().map(|p| p.2).sum();
            err = panels.iter().map(|p| p.3).sum();
        }
    }
}

fn nonconvergence<T: Scalar>(a: T, b: T, err: T) -> Error {
    Error::QuadratureNonconvergence {
        lower: a.as_f64(),
        upper: b.as_f64(),
        estimate: err.as_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact_on_one_panel() {
        let (k, _) = kronrod15(&|x: f64| x.powi(20), -1.0, 1.0);
        assert_relative_eq!(k, 2.0 / 21.0, max_relative = 1e-14);
    }

    #[test]
    fn log_two_from_reciprocal() {
        let v = integrate(|r: f64| 1.0 / (1.0 + r), 1.0, 3.0, 1e-12).unwrap();
        assert_relative_eq!(v, 2f64.ln(), max_relative = 1e-13);
    }

    #[test]
    fn reversed_interval_flips_sign() {
        let fwd = integrate(|r: f64| r.exp(), 0.0, 2.0, 1e-12).unwrap();
        let bwd = integrate(|r: f64| r.exp(), 2.0, 0.0, 1e-12).unwrap();
        assert_relative_eq!(fwd, -bwd, max_relative = 1e-15);
        assert_relative_eq!(fwd, 2f64.exp() - 1.0, max_relative = 1e-13);
    }

    #[test]
    fn nonintegrable_singularity_fails() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-12);
        assert!(matches!(r, Err(Error::QuadratureNonconvergence { .. })));
    }
}
