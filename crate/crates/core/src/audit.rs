//! Physics sanity checks: charge-trap spectral diffusion, Joule heating of a
//! biased waveguide at cryogenic temperature, and the bulk thermal shift.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, GAS_CONSTANT, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};

/// Relative permittivity of silicon at low temperature.
pub const SILICON_PERMITTIVITY: f64 = 11.7;

/// Thermal broadening reference value at the heated operating point, GHz.
/// Kept only as a check constant; no model reproduces it.
pub const THERMAL_BROADENING_CHECK_GHZ: f64 = 0.78;

/// RMS field of `charge` elementary charges at distance `r_nm`, V/m.
pub fn trap_field(charge: f64, r_nm: f64, eps_r: f64) -> Result<f64> {
    if !(r_nm > 0.0 && eps_r > 0.0) {
        return Err(Error::invalid("trap distance and permittivity must be positive"));
    }
    let r = r_nm * 1e-9;
    Ok((charge * ELEMENTARY_CHARGE).abs() / (4.0 * PI * VACUUM_PERMITTIVITY * eps_r * r * r))
}

/// Lorentzian of FWHM `gamma1` wandering over a Gaussian set by the field of a
/// charge trap: `G/2 + sqrt((G/2)^2 + 8 ln2 (F dmu)^2)`, GHz. `dmu` in Hz m/V.
pub fn sd_linewidth_from_field(gamma1: f64, field: f64, dmu: f64) -> f64 {
    let half = gamma1 / 2.0;
    let sd = field * dmu * 1e-9;
    half + (half * half + 8.0 * std::f64::consts::LN_2 * sd * sd).sqrt()
}

pub fn sd_linewidth_from_trap(gamma1: f64, charge: f64, r_nm: f64, eps_r: f64, dmu: f64) -> Result<f64> {
    Ok(sd_linewidth_from_field(gamma1, trap_field(charge, r_nm, eps_r)?, dmu))
}

/// Device geometry and operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalGeometry {
    pub cross_section_um2: f64,
    pub length_um: f64,
    pub surface_area_um2: f64,
    pub r_in_um: f64,
    pub r_out_mm: f64,
    pub sink_temperature_k: f64,
    pub gas_pressure_pa: f64,
    pub dissipated_power_nw: f64,
}

impl ThermalGeometry {
    /// 30 um waveguide of 0.09 um^2 cross-section in 1.8 kPa helium at 2.5 K,
    /// dissipating 4 nW.
    pub fn waveguide_device() -> Self {
        ThermalGeometry {
            cross_section_um2: 0.09,
            length_um: 30.0,
            surface_area_um2: 25.6,
            r_in_um: 0.15,
            r_out_mm: 42.5,
            sink_temperature_k: 2.5,
            gas_pressure_pa: 1800.0,
            dissipated_power_nw: 4.0,
        }
    }

    /// Side of the equivalent square cross-section, um.
    pub fn characteristic_dim_um(&self) -> f64 {
        self.cross_section_um2.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.cross_section_um2,
            self.length_um,
            self.surface_area_um2,
            self.r_in_um,
            self.r_out_mm,
            self.sink_temperature_k,
            self.gas_pressure_pa,
        ];
        if all.iter().any(|v| !(*v > 0.0)) || !(self.dissipated_power_nw >= 0.0) {
            return Err(Error::invalid("geometry values must be positive"));
        }
        if !(self.r_out_mm * 1e3 > self.r_in_um) {
            return Err(Error::invalid("r_out must exceed r_in"));
        }
        Ok(())
    }
}

/// Solid and gas properties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConstants {
    pub debye_temperature_k: f64,
    pub atomic_density_m3: f64,
    pub sound_velocity_m_s: f64,
    /// Phonon mean free path per unit side length in the boundary-scattering limit.
    pub casimir_factor: f64,
    pub gas_kinetic_diameter_m: f64,
    pub gas_molar_mass_kg_mol: f64,
    pub accommodation: f64,
    pub heat_capacity_ratio: f64,
    pub viscosity_ref_pa_s: f64,
    pub viscosity_ref_temperature_k: f64,
    pub viscosity_exponent: f64,
}

impl MaterialConstants {
    /// Silicon in helium.
    pub fn silicon_helium() -> Self {
        MaterialConstants {
            debye_temperature_k: 645.0,
            atomic_density_m3: 5e28,
            sound_velocity_m_s: 6400.0,
            casimir_factor: 1.115,
            gas_kinetic_diameter_m: 2.55e-10,
            gas_molar_mass_kg_mol: 4.002_602e-3,
            accommodation: 0.5,
            heat_capacity_ratio: 5.0 / 3.0,
            viscosity_ref_pa_s: 0.9825e-6,
            viscosity_ref_temperature_k: 3.5,
            viscosity_exponent: 0.647,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.debye_temperature_k,
            self.atomic_density_m3,
            self.sound_velocity_m_s,
            self.casimir_factor,
            self.gas_kinetic_diameter_m,
            self.gas_molar_mass_kg_mol,
            self.viscosity_ref_pa_s,
            self.viscosity_ref_temperature_k,
            self.viscosity_exponent,
        ];
        if all.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("material constants must be positive"));
        }
        if !(self.accommodation > 0.0 && self.accommodation <= 1.0) {
            return Err(Error::invalid("accommodation must lie in (0, 1]"));
        }
        if !(self.heat_capacity_ratio > 1.0) {
            return Err(Error::invalid("heat capacity ratio must exceed 1"));
        }
        Ok(())
    }
}

/// Low-temperature Debye heat capacity `(12 pi^4 / 5) N k (T/T_D)^3`, J/(m^3 K).
pub fn debye_heat_capacity(t: f64, m: &MaterialConstants) -> f64 {
    if t > m.debye_temperature_k / 10.0 {
        log::warn!("T = {t} K is above T_D/10; the T^3 law overestimates the heat capacity");
    }
    12.0 * PI.powi(4) / 5.0 * m.atomic_density_m3 * BOLTZMANN * (t / m.debye_temperature_k).powi(3)
}

/// Boundary-limited conductivity `Cv v_s D_eff / 3`, W/(m K). `d_eff` in m.
pub fn casimir_conductivity(cv: f64, sound_velocity: f64, d_eff: f64) -> f64 {
    cv * sound_velocity * d_eff / 3.0
}

/// `(L/2) / (kappa sigma)` for a bar heated in the middle and sunk at both ends, K/W.
pub fn solid_thermal_resistance(g: &ThermalGeometry, kappa: f64) -> f64 {
    0.5 * g.length_um * 1e-6 / (kappa * g.cross_section_um2 * 1e-12)
}

/// Ideal-gas mean free path `kT / (sqrt2 pi d^2 p)`, nm.
pub fn gas_mean_free_path(t: f64, p: f64, d: f64) -> Result<f64> {
    if !(p > 0.0 && d > 0.0 && t > 0.0) {
        return Err(Error::invalid("temperature, pressure and diameter must be positive"));
    }
    Ok(BOLTZMANN * t / (std::f64::consts::SQRT_2 * PI * d * d * p) * 1e9)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnudsenRegime {
    Continuum,
    Transition,
    FreeMolecular,
}

impl KnudsenRegime {
    pub fn classify(kn: f64) -> Self {
        if kn < 0.01 {
            KnudsenRegime::Continuum
        } else if kn <= 10.0 {
            KnudsenRegime::Transition
        } else {
            KnudsenRegime::FreeMolecular
        }
    }
}

/// Knudsen number for mean free path and length in the same unit.
pub fn knudsen(mean_free_path: f64, length: f64) -> f64 {
    mean_free_path / length
}

/// Power-law viscosity through the reference point, Pa s.
pub fn gas_viscosity(t: f64, m: &MaterialConstants) -> f64 {
    m.viscosity_ref_pa_s * (t / m.viscosity_ref_temperature_k).powf(m.viscosity_exponent)
}

/// Heat transfer from the waveguide surface to the gas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasCooling {
    /// W/(m^2 K).
    pub h_free_molecular: f64,
    /// Pa s.
    pub viscosity: f64,
    /// W/(m K).
    pub kappa_gas: f64,
    pub h_continuum: f64,
    pub h_effective: f64,
    /// K/W.
    pub resistance: f64,
}

pub fn gas_cooling(t: f64, p: f64, g: &ThermalGeometry, m: &MaterialConstants) -> GasCooling {
    let gamma = m.heat_capacity_ratio;
    let molar = m.gas_molar_mass_kg_mol;
    let h_fm = m.accommodation * (gamma + 1.0) / (gamma - 1.0) * (GAS_CONSTANT / (8.0 * PI * molar * t)).sqrt() * p;
    let viscosity = gas_viscosity(t, m);
    let kappa_gas = 15.0 * GAS_CONSTANT * viscosity / (4.0 * molar);
    let r_in = g.r_in_um * 1e-6;
    let r_out = g.r_out_mm * 1e-3;
    let h_cont = 0.5 * kappa_gas / (r_in * (r_out / r_in).ln());
    let h_eff = 1.0 / (1.0 / h_fm + 1.0 / h_cont);
    GasCooling {
        h_free_molecular: h_fm,
        viscosity,
        kappa_gas,
        h_continuum: h_cont,
        h_effective: h_eff,
        resistance: 1.0 / (h_eff * g.surface_area_um2 * 1e-12),
    }
}

/// Temperature rise for conduction through the solid only, the gas only, and both in parallel, K.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureRise {
    pub solid_only: f64,
    pub gas_only: f64,
    pub combined: f64,
}

pub fn temperature_rise(power_w: f64, r_solid: f64, r_gas: f64) -> Result<TemperatureRise> {
    if !(power_w >= 0.0) {
        return Err(Error::invalid("power must be >= 0"));
    }
    Ok(TemperatureRise {
        solid_only: power_w * r_solid,
        gas_only: power_w * r_gas,
        combined: power_w / (1.0 / r_solid + 1.0 / r_gas),
    })
}

/// Bulk T^4 coefficient of the zero-phonon line, MHz/K^4.
pub const BULK_SHIFT_MHZ_PER_K4: f64 = -0.866;

/// `A (T^4 - T0^4)` in GHz with `a_mhz_per_k4` in MHz/K^4.
pub fn thermal_shift(t: f64, a_mhz_per_k4: f64, base_t: f64) -> f64 {
    a_mhz_per_k4 * (t.powi(4) - base_t.powi(4)) * 1e-3
}

/// Absolute temperature at which the bulk shift law reaches `target_ghz`.
pub fn thermal_shift_temperature(target_ghz: f64, a_mhz_per_k4: f64, base_t: f64) -> Result<f64> {
    if !(base_t >= 0.0) || a_mhz_per_k4 == 0.0 || !a_mhz_per_k4.is_finite() || !target_ghz.is_finite() {
        return Err(Error::invalid("need base temperature >= 0 and a finite non-zero coefficient"));
    }
    if target_ghz == 0.0 {
        return Ok(base_t);
    }
    let ratio = target_ghz * 1e3 / a_mhz_per_k4;
    if ratio < 0.0 {
        return Err(Error::domain(format!(
            "shift {target_ghz} GHz has the opposite sign to the coefficient {a_mhz_per_k4} MHz/K^4"
        )));
    }
    Ok((base_t.powi(4) + ratio).powf(0.25))
}

/// One row of the audit table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub name: &'static str,
    pub formula: &'static str,
    pub value: f64,
    pub unit: &'static str,
    /// Published value, when there is one to compare against.
    pub expected: Option<f64>,
}

impl Checkpoint {
    pub fn deviation(&self) -> Option<f64> {
        self.expected.map(|e| (self.value - e).abs() / e.abs())
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.deviation().is_none_or(|d| d <= tolerance)
    }
}

/// End-to-end Joule heating chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalAudit {
    pub geometry: ThermalGeometry,
    pub constants: MaterialConstants,
    pub heat_capacity: f64,
    pub d_eff_um: f64,
    pub kappa_si: f64,
    pub r_solid: f64,
    pub mean_free_path_nm: f64,
    pub knudsen: f64,
    pub regime: KnudsenRegime,
    pub gas: GasCooling,
    pub rise: TemperatureRise,
}

pub fn thermal_audit(g: &ThermalGeometry, m: &MaterialConstants) -> Result<ThermalAudit> {
    g.validate()?;
    m.validate()?;
    let t = g.sink_temperature_k;
    let cv = debye_heat_capacity(t, m);
    let d_eff_um = m.casimir_factor * g.characteristic_dim_um();
    let kappa_si = casimir_conductivity(cv, m.sound_velocity_m_s, d_eff_um * 1e-6);
    let r_solid = solid_thermal_resistance(g, kappa_si);
    let mfp = gas_mean_free_path(t, g.gas_pressure_pa, m.gas_kinetic_diameter_m)?;
    let kn = knudsen(mfp, g.characteristic_dim_um() * 1e3);
    let gas = gas_cooling(t, g.gas_pressure_pa, g, m);
    let rise = temperature_rise(g.dissipated_power_nw * 1e-9, r_solid, gas.resistance)?;
    Ok(ThermalAudit {
        geometry: *g,
        constants: *m,
        heat_capacity: cv,
        d_eff_um,
        kappa_si,
        r_solid,
        mean_free_path_nm: mfp,
        knudsen: kn,
        regime: KnudsenRegime::classify(kn),
        gas,
        rise,
    })
}

/// Published values for the default device, in checkpoint order.
pub const PUBLISHED: [(&str, f64); 11] = [
    ("Cv", 9.4),
    ("kappa_Si", 0.0067),
    ("R_solid", 2.49e10),
    ("dT_solid", 99.0),
    ("mean_free_path", 66.0),
    ("Kn", 0.22),
    ("h_fm", 20_699.0),
    ("kappa_gas", 0.0061),
    ("h_cont", 1619.0),
    ("h_eff", 1501.0),
    ("dT", 0.1),
];

impl ThermalAudit {
    /// Every intermediate; published values are attached when `with_expected`.
    pub fn checkpoints(&self, with_expected: bool) -> Vec<Checkpoint> {
        let exp = |name: &str| {
            if with_expected {
                PUBLISHED.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
            } else {
                None
            }
        };
        let row = |name: &'static str, formula: &'static str, value: f64, unit: &'static str| Checkpoint {
            name,
            formula,
            value,
            unit,
            expected: exp(name),
        };
        vec![
            row("Cv", "(12 pi^4/5) N k (T/T_D)^3", self.heat_capacity, "J/(m^3 K)"),
            row("D_eff", "1.115 sqrt(sigma)", self.d_eff_um, "um"),
            row("kappa_Si", "Cv v_s D_eff / 3", self.kappa_si, "W/(m K)"),
            row("R_solid", "(L/2) / (kappa sigma)", self.r_solid, "K/W"),
            row("dT_solid", "P R_solid", self.rise.solid_only, "K"),
            row("mean_free_path", "kT / (sqrt2 pi d^2 p)", self.mean_free_path_nm, "nm"),
            row("Kn", "Lambda / L_c", self.knudsen, ""),
            row("h_fm", "alpha (g+1)/(g-1) sqrt(R/(8 pi M T)) p", self.gas.h_free_molecular, "W/(m^2 K)"),
            row("eta", "eta_ref (T/T_ref)^0.647", self.gas.viscosity, "Pa s"),
            row("kappa_gas", "15 R eta / (4 M)", self.gas.kappa_gas, "W/(m K)"),
            row("h_cont", "kappa_gas / (2 r_in ln(r_out/r_in))", self.gas.h_continuum, "W/(m^2 K)"),
            row("h_eff", "(1/h_fm + 1/h_cont)^-1", self.gas.h_effective, "W/(m^2 K)"),
            row("R_gas", "1 / (h_eff A)", self.gas.resistance, "K/W"),
            row("dT_gas", "P R_gas", self.rise.gas_only, "K"),
            row("dT", "P (1/R_solid + 1/R_gas)^-1", self.rise.combined, "K"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn trap_linewidth() {
        assert_eq!(sd_linewidth_from_trap(1.3, 0.0, 110.0, SILICON_PERMITTIVITY, 7519.0).unwrap(), 1.3);
        let f = trap_field(1.0, 110.0, SILICON_PERMITTIVITY).unwrap();
        assert!((f - 1.017e4).abs() < 5.0, "{f}");
        let g = sd_linewidth_from_trap(0.0, 1.0, 110.0, SILICON_PERMITTIVITY, 7519.0).unwrap();
        assert!((g - 0.180).abs() < 5e-4, "{g}");
        let far = sd_linewidth_from_trap(0.0, 1.0, 110.0 * 2f64.sqrt(), SILICON_PERMITTIVITY, 7519.0).unwrap();
        assert_relative_eq!(far, g / 2.0, max_relative = 1e-12);
        assert!(trap_field(1.0, 0.0, 11.7).is_err());
    }

    #[test]
    fn chain_reproduces_published_values() {
        let a = thermal_audit(&ThermalGeometry::waveguide_device(), &MaterialConstants::silicon_helium()).unwrap();
        let rows = a.checkpoints(true);
        assert_eq!(rows.iter().filter(|r| r.expected.is_some()).count(), 11);
        for r in &rows {
            // the combined rise is published to one significant figure
            let tol = if r.name == "dT" { 0.05 } else { 0.02 };
            assert!(r.passes(tol), "{} = {} vs {:?}", r.name, r.value, r.expected);
        }
        assert_eq!(a.regime, KnudsenRegime::Transition);
        assert!((a.heat_capacity - 9.397).abs() < 1e-3);
        assert!((a.gas.h_continuum - 1634.8).abs() < 0.5);
        assert!(a.gas.h_effective <= a.gas.h_free_molecular.min(a.gas.h_continuum));
        assert!(a.rise.combined <= a.rise.solid_only.min(a.rise.gas_only));
    }

    #[test]
    fn mean_free_path_scaling() {
        let l = gas_mean_free_path(2.5, 1800.0, 2.55e-10).unwrap();
        assert!((l - 66.4).abs() < 0.1);
        assert_relative_eq!(gas_mean_free_path(2.5, 3600.0, 2.55e-10).unwrap(), l / 2.0, max_relative = 1e-14);
        assert_eq!(KnudsenRegime::classify(0.001), KnudsenRegime::Continuum);
        assert_eq!(KnudsenRegime::classify(10.0), KnudsenRegime::Transition);
        assert_eq!(KnudsenRegime::classify(11.0), KnudsenRegime::FreeMolecular);
    }

    #[test]
    fn rise_is_linear() {
        let z = temperature_rise(0.0, 2.49e10, 2.6e7).unwrap();
        assert_eq!((z.solid_only, z.gas_only, z.combined), (0.0, 0.0, 0.0));
        let a = temperature_rise(4e-9, 2.49e10, 2.6e7).unwrap();
        let b = temperature_rise(8e-9, 2.49e10, 2.6e7).unwrap();
        assert_relative_eq!(b.combined, 2.0 * a.combined, max_relative = 1e-15);
        assert!((a.solid_only - 99.6).abs() < 0.1);
    }

    #[test]
    fn shift_temperature() {
        let t = thermal_shift_temperature(-0.9, -0.866, 1.6).unwrap();
        assert!((t - 5.687).abs() < 1e-3, "{t}");
        assert_eq!(thermal_shift_temperature(0.0, -0.866, 1.6).unwrap(), 1.6);
        assert_relative_eq!(thermal_shift_temperature(-0.866e-3, -0.866, 0.0).unwrap(), 1.0, max_relative = 1e-12);
        assert!(matches!(thermal_shift_temperature(0.9, -0.866, 1.6), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn shift_round_trip(dnu in -20.0f64..-1e-6, base in 0.0f64..4.0) {
            let t = thermal_shift_temperature(dnu, -0.866, base).unwrap();
            prop_assert!((thermal_shift(t, -0.866, base) - dnu).abs() < 1e-9);
        }

        #[test]
        fn trap_linewidth_monotone(f1 in 0.0f64..1e5, f2 in 0.0f64..1e5, g in 0.0f64..5.0) {
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            prop_assert!(sd_linewidth_from_field(g, lo, 7519.0) <= sd_linewidth_from_field(g, hi, 7519.0));
        }
    }
}
