//! Globally adaptive Gauss-Kronrod 7-15 quadrature.

#![allow(clippy::excessive_precision)]

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
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
    /// False when the interval budget ran out before the tolerance was met.
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let pair = f(c - dx) + f(c + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrate `f` over `[a, b]` until the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)`, bisecting the worst segment each step.
pub fn integrate<T, F>(f: F, a: T, b: T, abs_tol: T, rel_tol: T) -> Integral<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    integrate_with_limit(f, a, b, abs_tol, rel_tol, 2000)
}

pub fn integrate_with_limit<T, F>(f: F, a: T, b: T, abs_tol: T, rel_tol: T, max_segments: usize) -> Integral<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    if a == b {
        return Integral { value: T::zero(), error: T::zero(), evaluations: 0, converged: true };
    }
    let (value, error) = gk15(&f, a, b);
    let mut segs = vec![Segment { a, b, value, error }];
    let mut evaluations = 15;
    loop {
        let total: T = segs.iter().fold(T::zero(), |s, g| s + g.value);
        let err: T = segs.iter().fold(T::zero(), |s, g| s + g.error);
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol || segs.len() >= max_segments {
            return Integral { value: total, error: err, evaluations, converged: err <= tol };
        }
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let s = segs.swap_remove(worst);
        let mid = (s.a + s.b) * T::lit(0.5);
        if mid <= s.a || mid >= s.b {
            // cannot split further at this precision
            segs.push(Segment { error: T::zero(), ..s });
            continue;
        }
        let (v1, e1) = gk15(&f, s.a, mid);
        let (v2, e2) = gk15(&f, mid, s.b);
        evaluations += 30;
        segs.push(Segment { a: s.a, b: mid, value: v1, error: e1 });
        segs.push(Segment { a: mid, b: s.b, value: v2, error: e2 });
    }
}

/// Integral over the whole real line via `x = t / (1 - t^2)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, abs_tol: f64, rel_tol: f64) -> Integral<f64> {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let x = t / d;
        let jac = (1.0 + t * t) / (d * d);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_with_limit(g, -1.0, 1.0, abs_tol, rel_tol, 20_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x: f64| 3.0 * x * x + 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 0.0);
        assert_relative_eq!(r.value, 14.0, epsilon = 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn gaussian_over_real_line() {
        let r = integrate_real_line(|x| (-x * x).exp(), 1e-12, 1e-12);
        assert_relative_eq!(r.value, std::f64::consts::PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(|x: f64| (50.0 * x).cos(), 0.0, 1.0, 1e-12, 0.0);
        assert_relative_eq!(r.value, 50f64.sin() / 50.0, epsilon = 1e-11);
        let r = integrate(|x: f64| 1e-3 / (x * x + 1e-6), -1.0, 1.0, 1e-10, 0.0);
        assert_relative_eq!(r.value, 2.0 * (1e3f64).atan(), epsilon = 1e-8);
    }

    #[test]
    fn f32_works() {
        let r = integrate(|x: f32| x.exp(), 0.0, 1.0, 1e-5, 0.0);
        assert!((r.value - (1f32.exp() - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|x: f64| x, 1.0, 1.0, 1e-9, 0.0).value, 0.0);
    }
}
