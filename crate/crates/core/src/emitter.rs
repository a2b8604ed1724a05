//! Bias response of a single emitter: Stark shift, spectral-diffusion
//! broadening, charge-state quenching and cavity lifetime modification.
//!
//! Frequencies are GHz, voltages V. Reverse bias is negative; every response is
//! flat (no tuning) between the threshold voltage and zero bias.

use serde::{Deserialize, Serialize};

use crate::constants::{BOHR_MAGNETON_GHZ_PER_T, BOLTZMANN_MEV_PER_K};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Absolute tolerance used when polishing inverted voltages, V.
const VOLTAGE_TOL: f64 = 1e-12;

/// Voltage to charge-state occupancy map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum QuenchModel<T> {
    /// `(1 + exp((v_switch - V) / width))^-1`.
    Sigmoid { v_switch: T, width: T },
    /// Fermi-Dirac occupancy of the neutral state with a hole quasi-Fermi level
    /// that moves linearly with bias:
    /// `(1 + exp((level_offset - fermi_slope * V) / (k_B T)))^-1`.
    ///
    /// `level_offset` is the transition level minus the quasi-Fermi level at zero
    /// bias (meV); a negative value keeps the neutral state occupied at 0 V.
    FermiDirac { level_offset_mev: T, fermi_slope_mev_per_v: T, temperature_k: T },
    /// Steady state of a constant capture rate against field-driven tunnelling,
    /// `capture / (capture + prefactor * exp(-field_scale / F(V)))` with the
    /// affine field `F(V) = field_at_zero_bias - field_per_volt * V` (MV/m).
    FieldIonization {
        capture_rate: T,
        ionization_prefactor: T,
        field_scale: T,
        field_at_zero_bias: T,
        field_per_volt: T,
    },
}

impl<T: Scalar> QuenchModel<T> {
    pub fn sigmoid(v_switch: T, width: T) -> Result<Self> {
        let q = QuenchModel::Sigmoid { v_switch, width };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            QuenchModel::Sigmoid { v_switch, width } => v_switch.is_finite() && width > T::zero(),
            QuenchModel::FermiDirac { level_offset_mev, fermi_slope_mev_per_v, temperature_k } => {
                level_offset_mev.is_finite() && fermi_slope_mev_per_v > T::zero() && temperature_k > T::zero()
            }
            QuenchModel::FieldIonization {
                capture_rate,
                ionization_prefactor,
                field_scale,
                field_at_zero_bias,
                field_per_volt,
            } => {
                capture_rate > T::zero()
                    && ionization_prefactor > T::zero()
                    && field_scale > T::zero()
                    && field_at_zero_bias.is_finite()
                    && field_per_volt > T::zero()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("quench model parameters out of range: {self:?}")))
        }
    }

    /// Probability of the optically active (neutral) charge state at bias `v`.
    pub fn neutral_fraction(&self, v: T) -> T {
        let one = T::one();
        match *self {
            QuenchModel::Sigmoid { v_switch, width } => logistic((v - v_switch) / width),
            QuenchModel::FermiDirac { level_offset_mev, fermi_slope_mev_per_v, temperature_k } => {
                let kt = T::lit(BOLTZMANN_MEV_PER_K) * temperature_k;
                logistic(-(level_offset_mev - fermi_slope_mev_per_v * v) / kt)
            }
            QuenchModel::FieldIonization {
                capture_rate,
                ionization_prefactor,
                field_scale,
                field_at_zero_bias,
                field_per_volt,
            } => {
                let field = field_at_zero_bias - field_per_volt * v;
                if field <= T::zero() {
                    return one;
                }
                let ionization = ionization_prefactor * (-field_scale / field).exp();
                capture_rate / (capture_rate + ionization)
            }
        }
    }

    /// Switching voltage and width of the sigmoid that this model reduces to.
    ///
    /// Exact for the Fermi-Dirac kind. For field ionization the returned pair is
    /// the logistic tangent at the half-occupancy voltage.
    pub fn equivalent_sigmoid(&self) -> (T, T) {
        match *self {
            QuenchModel::Sigmoid { v_switch, width } => (v_switch, width),
            QuenchModel::FermiDirac { level_offset_mev, fermi_slope_mev_per_v, temperature_k } => {
                let kt = T::lit(BOLTZMANN_MEV_PER_K) * temperature_k;
                (level_offset_mev / fermi_slope_mev_per_v, kt / fermi_slope_mev_per_v)
            }
            QuenchModel::FieldIonization {
                capture_rate,
                ionization_prefactor,
                field_scale,
                field_at_zero_bias,
                field_per_volt,
            } => {
                // capture = prefactor * exp(-s / F)  =>  F = s / ln(prefactor / capture)
                let ratio = (ionization_prefactor / capture_rate).ln();
                let f_half = field_scale / ratio;
                let v_half = (field_at_zero_bias - f_half) / field_per_volt;
                // d ln(Gi)/dV = s F'/F^2 with F' = -field_per_volt; logistic width is its inverse.
                let width = f_half * f_half / (field_scale * field_per_volt);
                (v_half, width)
            }
        }
    }
}

#[inline]
fn logistic<T: Scalar>(x: T) -> T {
    // stable for large |x|
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Bias response of one emitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkResponse<T> {
    /// Zero-field transition frequency, GHz.
    pub nu0: T,
    /// Zero-field FWHM linewidth, GHz.
    pub gamma0: T,
    /// Threshold voltage below which tuning starts, V.
    pub v_threshold: T,
    /// Linear tuning rate, GHz/V.
    pub alpha1: T,
    /// Quadratic tuning rate, GHz/V^2.
    pub alpha2: T,
    /// Linear broadening rate, GHz/V.
    pub gamma1: T,
    /// Quadratic broadening rate, GHz/V^2.
    pub gamma2: T,
    /// Most negative voltage for which the response is defined, V.
    pub v_min: T,
    pub quench: Option<QuenchModel<T>>,
}

/// Peak position, width and relative height at a given bias.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakProfile<T> {
    pub center: T,
    pub fwhm: T,
    pub relative_amplitude: T,
}

impl<T: Scalar> StarkResponse<T> {
    /// Response with linear tuning and broadening only.
    pub fn linear(nu0: T, gamma0: T, v_threshold: T, alpha1: T, gamma1: T, v_min: T) -> Result<Self> {
        let r = StarkResponse {
            nu0,
            gamma0,
            v_threshold,
            alpha1,
            alpha2: T::zero(),
            gamma1,
            gamma2: T::zero(),
            v_min,
            quench: None,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn with_quadratic(mut self, alpha2: T, gamma2: T) -> Self {
        self.alpha2 = alpha2;
        self.gamma2 = gamma2;
        self
    }

    pub fn with_quench(mut self, quench: QuenchModel<T>) -> Self {
        self.quench = Some(quench);
        self
    }

    pub fn with_v_min(mut self, v_min: T) -> Self {
        self.v_min = v_min;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite =
            [self.nu0, self.gamma0, self.v_threshold, self.alpha1, self.alpha2, self.gamma1, self.gamma2, self.v_min]
                .iter()
                .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("non-finite Stark response parameter"));
        }
        if self.gamma0 <= T::zero() {
            return Err(Error::invalid(format!("gamma0 must be positive, got {}", self.gamma0)));
        }
        if !(self.v_min <= self.v_threshold && self.v_threshold <= T::zero()) {
            return Err(Error::invalid(format!(
                "require v_min <= v_threshold <= 0, got v_min={} v_threshold={}",
                self.v_min, self.v_threshold
            )));
        }
        if let Some(q) = &self.quench {
            q.validate()?;
        }
        Ok(())
    }

    fn check_voltage(&self, v: T) -> Result<()> {
        if v.is_nan() || v < self.v_min || v > T::zero() {
            return Err(Error::domain(format!("voltage {v} outside valid range [{}, 0]", self.v_min)));
        }
        Ok(())
    }

    /// Frequency shift relative to `nu0`, GHz.
    pub fn stark_shift(&self, v: T) -> Result<T> {
        self.check_voltage(v)?;
        Ok(self.shift_unchecked(v))
    }

    fn shift_unchecked(&self, v: T) -> T {
        if v >= self.v_threshold {
            return T::zero();
        }
        let x = v - self.v_threshold;
        self.alpha1 * x + self.alpha2 * x * x
    }

    /// FWHM linewidth at bias `v`, GHz.
    pub fn stark_linewidth(&self, v: T) -> Result<T> {
        self.check_voltage(v)?;
        let width = if v >= self.v_threshold {
            self.gamma0
        } else {
            let x = v - self.v_threshold;
            self.gamma0 + self.gamma1 * x + self.gamma2 * x * x
        };
        if width <= T::zero() {
            return Err(Error::ModelValidity(format!("linewidth {width} GHz at {v} V is not positive")));
        }
        Ok(width)
    }

    /// Occupancy of the bright charge state; 1 when no quench model is attached.
    pub fn neutral_fraction(&self, v: T) -> Result<T> {
        self.check_voltage(v)?;
        Ok(self.quench.map_or(T::one(), |q| q.neutral_fraction(v)))
    }

    /// Peak centre, width and height relative to zero bias. The height follows
    /// from conserving the area of the line, scaled by the bright-state occupancy.
    pub fn peak_profile(&self, v: T) -> Result<PeakProfile<T>> {
        let shift = self.stark_shift(v)?;
        let fwhm = self.stark_linewidth(v)?;
        let nf = self.neutral_fraction(v)?;
        Ok(PeakProfile { center: self.nu0 + shift, fwhm, relative_amplitude: self.gamma0 / fwhm * nf })
    }

    /// Range of shifts reachable on `[v_lo, 0]`, as `(min, max)`.
    pub fn shift_range(&self, v_lo: T) -> Result<(T, T)> {
        self.check_voltage(v_lo)?;
        let mut lo = T::zero();
        let mut hi = T::zero();
        if v_lo < self.v_threshold {
            let x_lo = v_lo - self.v_threshold;
            let mut consider = |x: T| {
                let s = self.alpha1 * x + self.alpha2 * x * x;
                lo = lo.min(s);
                hi = hi.max(s);
            };
            consider(x_lo);
            if self.alpha2 != T::zero() {
                let vertex = -self.alpha1 / (T::lit(2.0) * self.alpha2);
                if vertex > x_lo && vertex < T::zero() {
                    consider(vertex);
                }
            }
        }
        Ok((lo, hi))
    }

    /// Inverse of [`stark_shift`](Self::stark_shift): the voltage of smallest
    /// magnitude in `[v_min, v_threshold]` that produces `target_shift`.
    pub fn voltage_for_shift(&self, target_shift: T) -> Result<T> {
        self.voltage_for_shift_within(target_shift, self.v_min)
    }

    /// As [`voltage_for_shift`](Self::voltage_for_shift) with the search limited to `[v_lo, v_threshold]`.
    pub fn voltage_for_shift_within(&self, target_shift: T, v_lo: T) -> Result<T> {
        let v_lo = v_lo.max(self.v_min);
        if !target_shift.is_finite() {
            return Err(Error::domain("target shift is not finite"));
        }
        if target_shift == T::zero() {
            return Ok(self.v_threshold);
        }
        let x_lo = v_lo - self.v_threshold;
        let unreachable = || {
            Error::Unreachable(format!("shift {target_shift} GHz not reachable on [{v_lo}, {}] V", self.v_threshold))
        };
        if x_lo >= T::zero() {
            return Err(unreachable());
        }
        let (a, b, c) = (self.alpha2, self.alpha1, -target_shift);
        let mut roots: Vec<T> = Vec::with_capacity(2);
        let scale = b.abs() + a.abs() * x_lo.abs();
        if a.abs() * x_lo.abs() <= T::epsilon() * scale {
            if b != T::zero() {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - T::lit(4.0) * a * c;
            if disc >= T::zero() {
                let sq = disc.sqrt();
                // numerically stable pair
                let q = -(b + b.signum() * sq) / T::lit(2.0);
                if q != T::zero() {
                    roots.push(c / q);
                    roots.push(q / a);
                } else {
                    roots.push(T::zero());
                }
            }
        }
        let tol = T::lit(1e-9);
        let best = roots
            .into_iter()
            .filter(|x| x.is_finite() && *x <= tol && *x >= x_lo - tol)
            .fold(None, |acc: Option<T>, x| match acc {
                Some(y) if y >= x => Some(y),
                _ => Some(x),
            })
            .ok_or_else(unreachable)?;
        // one Newton step against rounding in the quadratic formula
        let mut x = best.min(T::zero()).max(x_lo);
        let deriv = b + T::lit(2.0) * a * x;
        if deriv != T::zero() {
            let step = (b * x + a * x * x + c) / deriv;
            if step.abs() < T::lit(1e-3) {
                x = x - step;
            }
        }
        let x = x.min(T::zero()).max(x_lo);
        let v = self.v_threshold + x;
        let achieved = self.shift_unchecked(v);
        let err = (achieved - target_shift).abs();
        let allowed = T::lit(1e-9) * (T::one() + target_shift.abs());
        if err > allowed && deriv.abs() * T::lit(VOLTAGE_TOL) < err {
            return Err(unreachable());
        }
        Ok(v)
    }
}

/// One emitter with its identifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedEmitter<T> {
    pub id: String,
    pub response: StarkResponse<T>,
}

impl<T> NamedEmitter<T> {
    pub fn new(id: impl Into<String>, response: StarkResponse<T>) -> Self {
        NamedEmitter { id: id.into(), response }
    }
}

/// Optical cavity coupled to the emitters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityModel<T> {
    /// Resonance frequency, GHz.
    pub nu_cav: T,
    pub q_factor: T,
    /// Peak Purcell factor (ideal or effective).
    pub purcell_max: T,
    /// Quantum efficiency.
    pub eta_qe: T,
    /// Debye-Waller factor.
    pub eta_dw: T,
    /// Bulk lifetime, us.
    pub tau0: T,
}

impl<T: Scalar> CavityModel<T> {
    pub fn new(nu_cav: T, q_factor: T, purcell_max: T, eta_qe: T, eta_dw: T, tau0: T) -> Result<Self> {
        let c = CavityModel { nu_cav, q_factor, purcell_max, eta_qe, eta_dw, tau0 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !(self.q_factor > T::zero()) || !(self.nu_cav > T::zero()) {
            return Err(Error::invalid("cavity requires positive q_factor and nu_cav"));
        }
        if !unit(self.eta_qe) || !unit(self.eta_dw) {
            return Err(Error::invalid("efficiencies must lie in [0, 1]"));
        }
        if !(self.purcell_max >= T::zero()) || !(self.tau0 > T::zero()) {
            return Err(Error::invalid("purcell_max must be >= 0 and tau0 > 0"));
        }
        Ok(())
    }

    /// Cavity FWHM linewidth, GHz.
    pub fn linewidth(&self) -> T {
        self.nu_cav / self.q_factor
    }

    /// Lorentzian Purcell enhancement at emitter-cavity detuning `detuning` (GHz).
    pub fn purcell_enhancement(&self, detuning: T) -> T {
        let hw = self.linewidth() / T::lit(2.0);
        self.purcell_max * hw * hw / (detuning * detuning + hw * hw)
    }

    /// Lifetime reduction `tau0 / tau` at detuning `detuning` (GHz). Only the
    /// enhancement above 1 shortens the lifetime; a detuned cavity leaves the
    /// bulk rate unchanged.
    pub fn lifetime_ratio(&self, detuning: T) -> T {
        let p = self.purcell_enhancement(detuning).max(T::one());
        T::one() + self.eta_qe * self.eta_dw * (p - T::one())
    }

    /// Modified lifetime in us.
    pub fn lifetime(&self, detuning: T) -> T {
        self.tau0 / self.lifetime_ratio(detuning)
    }
}

/// Ideal peak Purcell factor from wavelength (nm), refractive index, Q and
/// mode volume (um^3).
pub fn ideal_purcell<T: Scalar>(wavelength_nm: T, refractive_index: T, q_factor: T, mode_volume_um3: T) -> T {
    let lambda_um = wavelength_nm / T::lit(1000.0) / refractive_index;
    T::lit(3.0) / (T::lit(4.0) * T::PI() * T::PI()) * lambda_um.powi(3) * q_factor / mode_volume_um3
}

/// Binding energy and spatial extent of the bound hole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonizationParams<T> {
    pub binding_energy_mev: T,
    pub spatial_extent_angstrom: T,
}

impl<T: Scalar> IonizationParams<T> {
    pub fn new(binding_energy_mev: T, spatial_extent_angstrom: T) -> Result<Self> {
        if !(binding_energy_mev > T::zero() && spatial_extent_angstrom > T::zero()) {
            return Err(Error::invalid("binding energy and spatial extent must be positive"));
        }
        Ok(IonizationParams { binding_energy_mev, spatial_extent_angstrom })
    }

    /// Critical dissociation field `E_b / (e a*)` in MV/m.
    pub fn critical_field(&self) -> T {
        // meV / Angstrom = 1e-3 V / 1e-10 m = 1e7 V/m = 10 MV/m
        self.binding_energy_mev / self.spatial_extent_angstrom * T::lit(10.0)
    }
}

/// Zeeman splitting `g mu_B B / h` in GHz.
pub fn zeeman_splitting<T: Scalar>(g: T, b_field_t: T) -> T {
    g * T::lit(BOHR_MAGNETON_GHZ_PER_T) * b_field_t
}

/// g-factor that produces splitting `split_ghz` at field `b_field_t`.
pub fn g_from_splitting<T: Scalar>(split_ghz: T, b_field_t: T) -> Result<T> {
    if b_field_t == T::zero() || !b_field_t.is_finite() {
        return Err(Error::domain("g-factor inversion needs a non-zero magnetic field"));
    }
    Ok(split_ghz / (T::lit(BOHR_MAGNETON_GHZ_PER_T) * b_field_t))
}
