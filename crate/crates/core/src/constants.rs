//! Physical constants (CODATA 2018), ten significant digits or exact.

/// Bohr magneton divided by the Planck constant, GHz/T.
pub const BOHR_MAGNETON_GHZ_PER_T: f64 = 13.996_244_94;

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Boltzmann constant, meV/K.
pub const BOLTZMANN_MEV_PER_K: f64 = 8.617_333_262e-2;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_813e-12;

/// Molar gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314_462_618;
