//! Faddeeva function `w(z) = exp(-z^2) erfc(-iz)`.
//!
//! Upper half plane: Weideman's rational expansion with 32 terms; lower half
//! plane by reflection. Far from the origin a Laplace continued fraction is used.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::scalar::Scalar;

const N: usize = 32;
const FAR_FIELD: f64 = 15.0;

fn coefficients() -> &'static ([f64; N], f64) {
    static COEFFS: OnceLock<([f64; N], f64)> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let m = 2 * N;
        let l = (N as f64 / std::f64::consts::SQRT_2).sqrt();
        let mut f = vec![0.0; 2 * m];
        // f(k) for k in -M+1..=M-1; f(-M) stays 0
        let fk = |k: i64| {
            let theta = k as f64 * std::f64::consts::PI / m as f64;
            let t = l * (theta / 2.0).tan();
            (-t * t).exp() * (l * l + t * t)
        };
        for k in -(m as i64) + 1..m as i64 {
            f[(k + m as i64) as usize] = fk(k);
        }
        let mut a = [0.0; N];
        for (n, slot) in a.iter_mut().enumerate() {
            let n = n + 1;
            let mut s = 0.0;
            for k in -(m as i64) + 1..m as i64 {
                let arg = std::f64::consts::PI * (k as f64) * (n as f64) / m as f64;
                s += f[(k + m as i64) as usize] * arg.cos();
            }
            *slot = s / (2 * m) as f64;
        }
        (a, l)
    })
}

fn upper<T: Scalar>(z: Complex<T>) -> Complex<T> {
    let inv_sqrt_pi = T::lit(std::f64::consts::FRAC_2_SQRT_PI / 2.0);
    let i = Complex::new(T::zero(), T::one());
    if z.norm() > T::lit(FAR_FIELD) {
        // w(z) ~ (i/sqrt(pi)) / (z - (1/2)/(z - 1/(z - (3/2)/(z - ...))))
        let mut tail = z;
        for k in (1..=12).rev() {
            tail = z - Complex::new(T::lit(k as f64 / 2.0), T::zero()) / tail;
        }
        return i * inv_sqrt_pi / tail;
    }
    let (a, l) = coefficients();
    let l = Complex::new(T::lit(*l), T::zero());
    let iz = i * z;
    let denom = l - iz;
    let zz = (l + iz) / denom;
    let mut p = Complex::new(T::zero(), T::zero());
    for &coef in a.iter().rev() {
        p = p * zz + Complex::new(T::lit(coef), T::zero());
    }
    let two = T::lit(2.0);
    p * two / (denom * denom) + Complex::new(inv_sqrt_pi, T::zero()) / denom
}

/// `w(z)` for any complex `z`.
pub fn faddeeva<T: Scalar>(z: Complex<T>) -> Complex<T> {
    if z.im >= T::zero() {
        upper(z)
    } else {
        let two = Complex::new(T::lit(2.0), T::zero());
        two * (-(z * z)).exp() - upper(-z)
    }
}
