//! Spectral and temporal model functions shared by fitting and synthesis.
//!
//! Widths named `gamma_*` are FWHM in GHz; `sigma` is a Gaussian standard
//! deviation in GHz. Times are in ns unless a caller chooses otherwise; the
//! decay shapes are unit-agnostic.

mod faddeeva;

use serde::{Deserialize, Serialize};

pub use faddeeva::faddeeva;

use crate::error::{Error, Result};
use crate::scalar::{four_ln2, Scalar};
use num_complex::Complex;

/// Model families with a fixed parameter order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShapeKind {
    GaussLorentzProduct,
    Voigt,
    SkewedVoigt,
    Sigmoid,
    CavityComposite,
    SingleExp,
    DoubleDecay,
    HoleWidth,
}

impl LineShapeKind {
    pub const ALL: [LineShapeKind; 8] = [
        LineShapeKind::GaussLorentzProduct,
        LineShapeKind::Voigt,
        LineShapeKind::SkewedVoigt,
        LineShapeKind::Sigmoid,
        LineShapeKind::CavityComposite,
        LineShapeKind::SingleExp,
        LineShapeKind::DoubleDecay,
        LineShapeKind::HoleWidth,
    ];

    /// Parameter names in evaluation order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            LineShapeKind::GaussLorentzProduct => &["amplitude", "center_ghz", "gamma_g_ghz", "gamma_l_ghz"],
            LineShapeKind::Voigt => &["area", "center_ghz", "sigma_ghz", "gamma_l_ghz"],
            LineShapeKind::SkewedVoigt => &["area", "center_ghz", "sigma_ghz", "gamma_l_ghz", "skew"],
            LineShapeKind::Sigmoid => &["amplitude", "v_switch_v", "width_v"],
            LineShapeKind::CavityComposite => &[
                "fringe_amplitude",
                "fringe_frequency",
                "fringe_phase",
                "y0",
                "y1",
                "dip_amplitude",
                "nu_cav_ghz",
                "gamma_cav_ghz",
            ],
            LineShapeKind::SingleExp => &["amplitude", "tau"],
            LineShapeKind::DoubleDecay => &[
                "a1_fast",
                "t1_fast",
                "tau1_fast",
                "a1_slow",
                "t1_slow",
                "tau1_slow",
                "a2",
                "t2",
                "tau2_fall",
                "tau2_rise",
            ],
            LineShapeKind::HoleWidth => &["hom_linewidth", "p_sat"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            LineShapeKind::GaussLorentzProduct => "gauss_lorentz_product",
            LineShapeKind::Voigt => "voigt",
            LineShapeKind::SkewedVoigt => "skewed_voigt",
            LineShapeKind::Sigmoid => "sigmoid",
            LineShapeKind::CavityComposite => "cavity_composite",
            LineShapeKind::SingleExp => "single_exp",
            LineShapeKind::DoubleDecay => "double_decay",
            LineShapeKind::HoleWidth => "hole_width",
        }
    }

    /// Indices of parameters that must stay strictly positive.
    pub fn positive_params(self) -> &'static [usize] {
        match self {
            LineShapeKind::GaussLorentzProduct => &[2, 3],
            LineShapeKind::Voigt => &[2, 3],
            LineShapeKind::SkewedVoigt => &[2, 3],
            LineShapeKind::Sigmoid => &[2],
            LineShapeKind::CavityComposite => &[7],
            LineShapeKind::SingleExp => &[1],
            LineShapeKind::DoubleDecay => &[2, 5, 8, 9],
            LineShapeKind::HoleWidth => &[0, 1],
        }
    }

    /// Check parameter count and positivity.
    pub fn validate<T: Scalar>(self, params: &[T]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::invalid(format!(
                "{} expects {} parameters, got {}",
                self.name(),
                self.n_params(),
                params.len()
            )));
        }
        for &i in self.positive_params() {
            if !(params[i] > T::zero()) {
                return Err(Error::invalid(format!(
                    "{}: parameter {} must be positive, got {}",
                    self.name(),
                    self.param_names()[i],
                    params[i]
                )));
            }
        }
        if self == LineShapeKind::DoubleDecay && !(params[9] < params[8]) {
            return Err(Error::invalid("double_decay requires tau2_rise < tau2_fall"));
        }
        Ok(())
    }

    /// Evaluate at `x` without validation. `params` must have `n_params()` entries.
    pub fn eval<T: Scalar>(self, x: T, p: &[T]) -> T {
        match self {
            LineShapeKind::GaussLorentzProduct => gauss_lorentz_product(x, p[0], p[1], p[2], p[3]),
            LineShapeKind::Voigt => voigt(x, p[0], p[1], p[2], p[3]),
            LineShapeKind::SkewedVoigt => skewed_voigt(x, p[0], p[1], p[2], p[3], p[4]),
            LineShapeKind::Sigmoid => sigmoid(x, p[0], p[1], p[2]),
            LineShapeKind::CavityComposite => cavity_reflection(
                x,
                &CavityParams {
                    fringe_amplitude: p[0],
                    fringe_frequency: p[1],
                    fringe_phase: p[2],
                    y0: p[3],
                    y1: p[4],
                    dip_amplitude: p[5],
                    nu_cav: p[6],
                    gamma_cav: p[7],
                },
            ),
            LineShapeKind::SingleExp => single_exp(x, p[0], p[1]),
            LineShapeKind::DoubleDecay => double_decay(x, &DoubleDecayParams::from_slice(p)),
            LineShapeKind::HoleWidth => hole_width(x, T::zero(), p[1], p[0]),
        }
    }
}

impl std::fmt::Display for LineShapeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LineShapeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LineShapeKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown lineshape '{s}'")))
    }
}

/// Gaussian times Lorentzian, both centred at `center`; peak value `a`.
pub fn gauss_lorentz_product<T: Scalar>(nu: T, a: T, center: T, gamma_g: T, gamma_l: T) -> T {
    let d = nu - center;
    let hl = gamma_l / T::lit(2.0);
    a * (-four_ln2::<T>() * d * d / (gamma_g * gamma_g)).exp() * hl * hl / (d * d + hl * hl)
}

/// Area-normalised Voigt profile scaled to area `area`.
pub fn voigt<T: Scalar>(nu: T, area: T, center: T, sigma: T, gamma_l: T) -> T {
    let s2 = sigma * T::SQRT_2();
    let z = Complex::new((nu - center) / s2, gamma_l / T::lit(2.0) / s2);
    area * faddeeva(z).re / (sigma * (T::TAU()).sqrt())
}

/// Voigt multiplied by `1 + erf(skew (nu - center) / (sigma sqrt 2))`. The
/// skew factor is odd about the centre, so the area stays `area`.
pub fn skewed_voigt<T: Scalar>(nu: T, area: T, center: T, sigma: T, gamma_l: T, skew: T) -> T {
    let arg = skew * (nu - center) / (sigma * T::SQRT_2());
    voigt(nu, area, center, sigma, gamma_l) * (T::one() + arg.erf())
}

/// Approximate Voigt FWHM from the Gaussian sigma and Lorentzian FWHM.
pub fn voigt_fwhm_approx<T: Scalar>(sigma: T, gamma_l: T) -> T {
    let gg = crate::scalar::fwhm_per_sigma::<T>() * sigma;
    T::lit(0.5346) * gamma_l + (T::lit(0.2166) * gamma_l * gamma_l + gg * gg).sqrt()
}

/// `a / (1 + exp((v_switch - v) / width))`.
pub fn sigmoid<T: Scalar>(v: T, a: T, v_switch: T, width: T) -> T {
    a / (T::one() + ((v_switch - v) / width).exp())
}

/// Parameters of the fringe-modulated cavity reflection model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityParams<T> {
    pub fringe_amplitude: T,
    /// Fringe angular frequency, rad/GHz.
    pub fringe_frequency: T,
    /// Fringe phase at `nu_cav`, rad.
    pub fringe_phase: T,
    pub y0: T,
    /// Baseline slope, per GHz.
    pub y1: T,
    pub dip_amplitude: T,
    pub nu_cav: T,
    pub gamma_cav: T,
}

/// `[A sin(f (nu - nu_cav) + phi) + B] [B - L]` with `B = y0 + y1 (nu - nu_cav)` and
/// `L` a Lorentzian dip of height `dip_amplitude` and FWHM `gamma_cav`.
pub fn cavity_reflection<T: Scalar>(nu: T, c: &CavityParams<T>) -> T {
    let d = nu - c.nu_cav;
    let base = c.y0 + c.y1 * d;
    let hw = c.gamma_cav / T::lit(2.0);
    let dip = c.dip_amplitude * hw * hw / (d * d + hw * hw);
    (c.fringe_amplitude * (c.fringe_frequency * d + c.fringe_phase).sin() + base) * (base - dip)
}

/// `a exp(-t / tau)` for `t >= 0`, zero before.
pub fn single_exp<T: Scalar>(t: T, a: T, tau: T) -> T {
    if t < T::zero() {
        T::zero()
    } else {
        a * (-t / tau).exp()
    }
}

/// Parameters of the shelving-sequence transient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleDecayParams<T> {
    pub a1_fast: T,
    pub t1_fast: T,
    pub tau1_fast: T,
    pub a1_slow: T,
    pub t1_slow: T,
    pub tau1_slow: T,
    pub a2: T,
    pub t2: T,
    pub tau2_fall: T,
    pub tau2_rise: T,
}

impl<T: Scalar> DoubleDecayParams<T> {
    pub fn from_slice(p: &[T]) -> Self {
        DoubleDecayParams {
            a1_fast: p[0],
            t1_fast: p[1],
            tau1_fast: p[2],
            a1_slow: p[3],
            t1_slow: p[4],
            tau1_slow: p[5],
            a2: p[6],
            t2: p[7],
            tau2_fall: p[8],
            tau2_rise: p[9],
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        vec![
            self.a1_fast,
            self.t1_fast,
            self.tau1_fast,
            self.a1_slow,
            self.t1_slow,
            self.tau1_slow,
            self.a2,
            self.t2,
            self.tau2_fall,
            self.tau2_rise,
        ]
    }

    /// Integrated area of the delayed peak.
    pub fn second_peak_area(&self) -> T {
        self.a2 * (self.tau2_fall - self.tau2_rise)
    }
}

/// Bi-exponential first peak plus a rise-fall second peak; each term is zero
/// before its own onset.
pub fn double_decay<T: Scalar>(t: T, p: &DoubleDecayParams<T>) -> T {
    let term = |a: T, t0: T, tau: T| if t < t0 { T::zero() } else { a * (-(t - t0) / tau).exp() };
    let second = if t < p.t2 {
        T::zero()
    } else {
        let dt = t - p.t2;
        p.a2 * ((-dt / p.tau2_fall).exp() - (-dt / p.tau2_rise).exp())
    };
    term(p.a1_fast, p.t1_fast, p.tau1_fast) + term(p.a1_slow, p.t1_slow, p.tau1_slow) + second
}

/// Saturated hole FWHM `hom (1 + sqrt(1 + (pump + probe) / p_sat))`.
pub fn hole_width<T: Scalar>(p_pump: T, p_probe: T, p_sat: T, hom: T) -> T {
    hom * (T::one() + (T::one() + (p_pump + p_probe) / p_sat).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_real_line};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn glp_values() {
        assert_eq!(gauss_lorentz_product(3.0, 2.0, 3.0, 1.0, 1.0), 2.0);
        assert_relative_eq!(gauss_lorentz_product(1.0, 1.0, 0.0, 2.0, 2.0), 0.25, epsilon = 1e-15);
        let lor = |d: f64| 0.25 / (d * d + 0.25);
        assert_relative_eq!(gauss_lorentz_product(0.7, 1.0, 0.0, 1e9, 1.0), lor(0.7), epsilon = 1e-12);
    }

    #[test]
    fn cavity_values() {
        let mut c = CavityParams {
            fringe_amplitude: 0.0,
            fringe_frequency: 0.3,
            fringe_phase: 0.1,
            y0: 1.2,
            y1: 0.0,
            dip_amplitude: 0.4,
            nu_cav: 100.0,
            gamma_cav: 20.0,
        };
        assert_relative_eq!(cavity_reflection(100.0, &c), 1.2 * (1.2 - 0.4), epsilon = 1e-15);
        c.y0 = 1.0;
        c.dip_amplitude = 0.5;
        assert_relative_eq!(cavity_reflection(110.0, &c), 0.75, epsilon = 1e-15);
        c.dip_amplitude = 0.0;
        c.y1 = 0.01;
        assert_relative_eq!(cavity_reflection(130.0, &c), 1.3f64.powi(2), epsilon = 1e-14);
    }

    fn voigt_by_convolution(x: f64, sigma: f64, gamma_l: f64) -> f64 {
        let hw = gamma_l / 2.0;
        let g = |u: f64| (-u * u / (2.0 * sigma * sigma)).exp() / (sigma * std::f64::consts::TAU.sqrt());
        let l = |u: f64| hw / std::f64::consts::PI / (u * u + hw * hw);
        // split at the two peaks to help the adaptive rule
        let f = |u: f64| g(u) * l(x - u);
        let lim = 12.0 * sigma;
        let core = integrate(f, -lim, lim, 1e-15, 1e-12).value;
        let tails = integrate_real_line(|u| if u.abs() > lim { f(u) } else { 0.0 }, 1e-16, 1e-10).value;
        core + tails
    }

    #[test]
    fn voigt_matches_convolution() {
        for &(sigma, gl) in &[(1.0, 1.0), (0.3, 2.0), (2.0, 0.05), (0.7, 0.7)] {
            for &x in &[0.0, 0.4, 1.3, 3.0, 8.0] {
                let v = voigt(x, 1.0, 0.0, sigma, gl);
                let o = voigt_by_convolution(x, sigma, gl);
                assert_relative_eq!(v, o, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn voigt_is_area_normalised() {
        let r = integrate_real_line(|x| voigt(x, 2.5, 0.3, 0.8, 0.6), 1e-12, 1e-10);
        assert_relative_eq!(r.value, 2.5, max_relative = 1e-7);
        let r = integrate_real_line(|x| skewed_voigt(x, 2.5, 0.3, 0.8, 0.6, 0.7), 1e-12, 1e-10);
        assert_relative_eq!(r.value, 2.5, max_relative = 1e-7);
    }

    #[test]
    fn voigt_gaussian_limit() {
        let s = 1.3f64;
        for x in [0.0f64, 0.5, 2.0] {
            let g = (-x * x / (2.0 * s * s)).exp() / (s * std::f64::consts::TAU.sqrt());
            assert_relative_eq!(voigt(x, 1.0, 0.0, s, 1e-9), g, max_relative = 1e-7);
        }
    }

    #[test]
    fn voigt_fwhm_matches_approximation() {
        let (sigma, gl) = (1.0, 1.0);
        let peak = voigt(0.0, 1.0, 0.0, sigma, gl);
        // bisection for the half-maximum point
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if voigt(mid, 1.0, 0.0, sigma, gl) > peak / 2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let fwhm = 2.0 * lo;
        assert_relative_eq!(fwhm, voigt_fwhm_approx(sigma, gl), max_relative = 2.5e-4);
    }

    #[test]
    fn skew_zero_is_voigt() {
        for x in [-2.0, 0.0, 1.1] {
            assert_eq!(skewed_voigt(x, 1.0, 0.0, 0.5, 0.4, 0.0), voigt(x, 1.0, 0.0, 0.5, 0.4));
        }
    }

    #[test]
    fn decay_values() {
        assert_relative_eq!(single_exp(2.0, 3.0, 2.0), 3.0 / std::f64::consts::E, epsilon = 1e-15);
        assert_eq!(single_exp(-1.0, 3.0, 2.0), 0.0);
        let p = DoubleDecayParams {
            a1_fast: 0.0,
            t1_fast: 0.0,
            tau1_fast: 10.0,
            a1_slow: 0.0,
            t1_slow: 0.0,
            tau1_slow: 100.0,
            a2: 1.0,
            t2: 500.0,
            tau2_fall: 1000.0,
            tau2_rise: 200.0,
        };
        assert_eq!(double_decay(500.0, &p), 0.0);
        assert!(double_decay(520.0, &p) > 0.0);
        assert_relative_eq!(p.second_peak_area(), 800.0, epsilon = 1e-12);
        let area = integrate(|t| double_decay(t, &p), 500.0, 500.0 + 60_000.0, 1e-9, 1e-12).value;
        assert_relative_eq!(area, 800.0, max_relative = 1e-8);
    }

    #[test]
    fn double_reduces_to_single() {
        let p = DoubleDecayParams {
            a1_fast: 2.0,
            t1_fast: 0.0,
            tau1_fast: 35.0,
            a1_slow: 0.0,
            t1_slow: 5.0,
            tau1_slow: 300.0,
            a2: 0.0,
            t2: 100.0,
            tau2_fall: 400.0,
            tau2_rise: 30.0,
        };
        for t in [0.0, 10.0, 123.4, 800.0] {
            assert_eq!(double_decay(t, &p), single_exp(t, 2.0, 35.0));
        }
    }

    #[test]
    fn hole_values() {
        assert_relative_eq!(hole_width(0.0, 0.0, 14.0, 15.5), 31.0, epsilon = 1e-12);
        assert_relative_eq!(hole_width(2.0, 1.0, 1.0, 4.0), 12.0, epsilon = 1e-12);
        assert!((hole_width(400.0f64, 0.0, 14.0, 15.5) - 99.79).abs() < 0.005);
    }

    #[test]
    fn kind_metadata() {
        for k in LineShapeKind::ALL {
            assert_eq!(k.name().parse::<LineShapeKind>().unwrap(), k);
            assert!(k.positive_params().iter().all(|&i| i < k.n_params()));
        }
        assert!(LineShapeKind::Voigt.validate(&[1.0, 0.0, -1.0, 1.0]).is_err());
        assert!(LineShapeKind::Voigt.validate(&[1.0, 0.0]).is_err());
        assert!(LineShapeKind::HoleWidth.eval(3.0, &[4.0, 1.0]) == 12.0);
    }

    fn argmax_on_grid(f: impl Fn(f64) -> f64, center: f64, step: f64) -> f64 {
        (-2000..=2000).map(|i| center + i as f64 * step).max_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap()).unwrap()
    }

    proptest! {
        #[test]
        fn peaks_at_centre(c in -50.0f64..50.0, s in 0.1f64..5.0, g in 0.1f64..5.0) {
            let step = 0.01;
            let m = argmax_on_grid(|x| gauss_lorentz_product(x, 1.0, c, s, g), c, step);
            prop_assert!((m - c).abs() <= step + 1e-12);
            let m = argmax_on_grid(|x| voigt(x, 1.0, c, s, g), c, step);
            prop_assert!((m - c).abs() <= step + 1e-12);
            let m = argmax_on_grid(|x| skewed_voigt(x, 1.0, c, s, g, 0.0), c, step);
            prop_assert!((m - c).abs() <= step + 1e-12);
        }

        #[test]
        fn peak_shapes_non_negative(x in -100.0f64..100.0, s in 0.01f64..10.0, g in 0.01f64..10.0, k in -5.0f64..5.0) {
            prop_assert!(gauss_lorentz_product(x, 1.0, 0.0, s, g) >= 0.0);
            prop_assert!(voigt(x, 1.0, 0.0, s, g) >= 0.0);
            prop_assert!(skewed_voigt(x, 1.0, 0.0, s, g, k) >= 0.0);
        }

        #[test]
        fn hole_width_monotone(p in 0.0f64..1e3, dp in 0.0f64..1e3, sat in 0.1f64..100.0, hom in 0.1f64..100.0) {
            prop_assert!(hole_width(p + dp, 0.0, sat, hom) >= hole_width(p, 0.0, sat, hom));
            prop_assert!((hole_width(p, 0.0, sat, 2.0 * hom) - 2.0 * hole_width(p, 0.0, sat, hom)).abs() < 1e-9 * hom);
        }
    }
}
