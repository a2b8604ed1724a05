//! Two-emitter interference: gated HOM visibility and the joint excitation
//! probability of two Gaussian excitation profiles.
//!
//! Times are ns, frequencies GHz. Spectral-diffusion widths enter the HOM
//! model as Gaussian standard deviations; [`EmitterPairConfig::from_fwhm`]
//! converts from FWHM.

use serde::{Deserialize, Serialize};

use crate::emitter::StarkResponse;
use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::scalar::{four_ln2, sigma_from_fwhm, Scalar};

/// Absolute tolerance of the visibility quadrature.
pub const HOM_ABS_TOL: f64 = 1e-8;
/// Below this gate-to-lifetime ratio the envelope is treated as flat.
const FLAT_ENVELOPE: f64 = 1e-4;

/// Distinguishable-photon coincidence density `exp(-|tau|/tau') / (4 tau')`.
pub fn g2_envelope<T: Scalar>(tau: T, tau_prime: T) -> T {
    (-tau.abs() / tau_prime).exp() / (T::lit(4.0) * tau_prime)
}

/// Interference term of the coincidence density with combined spectral
/// diffusion `big_sigma` (GHz, standard deviation) and detuning `delta_nu`.
pub fn g2_interference<T: Scalar>(tau: T, tau_prime: T, big_sigma: T, delta_nu: T) -> T {
    let two_pi2 = T::lit(2.0) * T::PI() * T::PI();
    let arg = -tau.abs() / tau_prime - two_pi2 * big_sigma * big_sigma * tau * tau;
    arg.exp() * (T::TAU() * delta_nu * tau).cos() / (T::lit(4.0) * tau_prime)
}

/// Lifetime, spectral diffusion, detuning and detection gate of a photon pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmitterPairConfig<T> {
    /// Lifetime, ns.
    pub tau_prime: T,
    /// Spectral-diffusion standard deviations, GHz.
    pub sigma1: T,
    pub sigma2: T,
    /// Detuning, GHz.
    pub delta_nu: T,
    /// Full width of the symmetric detection gate, ns.
    pub gate: T,
}

impl<T: Scalar> EmitterPairConfig<T> {
    pub fn new(tau_prime: T, sigma1: T, sigma2: T, delta_nu: T, gate: T) -> Result<Self> {
        let c = EmitterPairConfig { tau_prime, sigma1, sigma2, delta_nu, gate };
        c.validate()?;
        Ok(c)
    }

    /// Build from FWHM linewidths, `sigma = fwhm / (2 sqrt(2 ln 2))`.
    pub fn from_fwhm(tau_prime: T, fwhm1: T, fwhm2: T, delta_nu: T, gate: T) -> Result<Self> {
        Self::new(tau_prime, sigma_from_fwhm(fwhm1), sigma_from_fwhm(fwhm2), delta_nu, gate)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_prime > T::zero() && self.gate > T::zero()) {
            return Err(Error::invalid("tau_prime and gate must be positive"));
        }
        if !(self.sigma1 >= T::zero() && self.sigma2 >= T::zero()) || !self.delta_nu.is_finite() {
            return Err(Error::invalid("spectral diffusion widths must be >= 0 and detuning finite"));
        }
        Ok(())
    }

    /// Combined variance `sigma1^2 + sigma2^2`.
    pub fn sigma_sq(&self) -> T {
        self.sigma1 * self.sigma1 + self.sigma2 * self.sigma2
    }
}

/// Gated visibility with an erf shortcut when the detuning is zero and the
/// envelope is flat across the gate.
pub fn hom_visibility<T: Scalar>(cfg: &EmitterPairConfig<T>) -> Result<T> {
    cfg.validate()?;
    let half = cfg.gate / T::lit(2.0);
    if cfg.delta_nu == T::zero() && half / cfg.tau_prime < T::lit(FLAT_ENVELOPE) {
        return Ok(flat_envelope_limit(cfg.sigma_sq(), cfg.gate));
    }
    hom_visibility_quadrature(cfg)
}

/// Gated visibility by adaptive quadrature of the interference term; the
/// envelope integral is exact.
pub fn hom_visibility_quadrature<T: Scalar>(cfg: &EmitterPairConfig<T>) -> Result<T> {
    cfg.validate()?;
    let half = cfg.gate / T::lit(2.0);
    let a = T::lit(2.0) * T::PI() * T::PI() * cfg.sigma_sq();
    let (tp, dn) = (cfg.tau_prime, cfg.delta_nu);
    // common 1/(4 tau') factor cancels in the ratio; both integrands are even
    let num = integrate(
        |t: T| (-t / tp - a * t * t).exp() * (T::TAU() * dn * t).cos(),
        T::zero(),
        half,
        T::lit(HOM_ABS_TOL),
        T::zero(),
    );
    let den = tp * (T::one() - (-half / tp).exp());
    let v = num.value / den;
    Ok(v.max(-T::one()).min(T::one()))
}

/// `sqrt(pi/a) erf(gate sqrt(a) / 2) / gate` with `a = 2 pi^2 Sigma^2`: the
/// visibility for an infinitely long lifetime at zero detuning.
pub fn flat_envelope_limit<T: Scalar>(sigma_sq: T, gate: T) -> T {
    let a = T::lit(2.0) * T::PI() * T::PI() * sigma_sq;
    if a == T::zero() {
        return T::one();
    }
    (T::PI() / a).sqrt() * (gate * a.sqrt() / T::lit(2.0)).erf() / gate
}

/// Peak of the product of a unit-height Gaussian of FWHM `gamma_fixed` and an
/// area-matched Gaussian of FWHM `gamma_tuned` detuned by `delta_nu`.
pub fn p_exc<T: Scalar>(gamma_fixed: T, gamma_tuned: T, delta_nu: T) -> T {
    let s = gamma_fixed * gamma_fixed + gamma_tuned * gamma_tuned;
    gamma_fixed / gamma_tuned * (-four_ln2::<T>() * delta_nu * delta_nu / s).exp()
}

/// `gamma_ratio exp(-4 ln2 delta_tilde^2)`.
pub fn p_exc_normalized<T: Scalar>(gamma_ratio: T, delta_tilde: T) -> T {
    gamma_ratio * (-four_ln2::<T>() * delta_tilde * delta_tilde).exp()
}

/// `(gamma_fixed / gamma_tuned, delta_nu / sqrt(gamma_fixed^2 + gamma_tuned^2))`.
pub fn normalize_pair<T: Scalar>(gamma_fixed: T, gamma_tuned: T, delta_nu: T) -> (T, T) {
    let s = (gamma_fixed * gamma_fixed + gamma_tuned * gamma_tuned).sqrt();
    (gamma_fixed / gamma_tuned, delta_nu / s)
}

/// Joint excitation probability with the narrower line taken as the fixed one,
/// so the result never exceeds 1.
pub fn p_exc_symmetric<T: Scalar>(gamma_a: T, gamma_b: T, delta_nu: T) -> T {
    if gamma_a <= gamma_b {
        p_exc(gamma_a, gamma_b, delta_nu)
    } else {
        p_exc(gamma_b, gamma_a, delta_nu)
    }
}

/// One point on a tuning trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapPoint<T> {
    pub voltage: T,
    pub gamma_ratio: T,
    pub delta_tilde: T,
    pub p_exc: T,
    pub neutral_fraction: T,
    /// Bright-state occupancy (and so the peak area) below 1/e.
    pub quenched: bool,
}

fn overlap_at<T: Scalar>(fixed: &StarkResponse<T>, tuned: &StarkResponse<T>, v: T) -> Result<OverlapPoint<T>> {
    let gf = fixed.gamma0;
    let gt = tuned.stark_linewidth(v)?;
    let dnu = tuned.nu0 + tuned.stark_shift(v)? - fixed.nu0;
    let nf = tuned.neutral_fraction(v)?;
    let (gamma_ratio, delta_tilde) = normalize_pair(gf, gt, dnu);
    Ok(OverlapPoint {
        voltage: v,
        gamma_ratio,
        delta_tilde,
        p_exc: p_exc_normalized(gamma_ratio, delta_tilde),
        neutral_fraction: nf,
        quenched: nf < (-T::one()).exp(),
    })
}

/// Overlap of `tuned` at each voltage with `fixed` held at zero bias.
pub fn tuning_trajectory<T: Scalar>(
    fixed: &StarkResponse<T>,
    tuned: &StarkResponse<T>,
    voltages: &[T],
) -> Result<Vec<OverlapPoint<T>>> {
    fixed.validate()?;
    tuned.validate()?;
    voltages.iter().map(|&v| overlap_at(fixed, tuned, v)).collect()
}

/// The trajectory point where `tuned` reaches the zero-bias frequency of `fixed`.
pub fn resonance_point<T: Scalar>(fixed: &StarkResponse<T>, tuned: &StarkResponse<T>) -> Result<OverlapPoint<T>> {
    let v = tuned.voltage_for_shift(fixed.nu0 - tuned.nu0)?;
    overlap_at(fixed, tuned, v)
}
