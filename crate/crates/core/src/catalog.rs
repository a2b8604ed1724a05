//! Measured bias-response parameters for the characterized centres.
//!
//! Linear-only rows carry zero quadratic coefficients. `v_min` is the lower end
//! of each centre's fit range.

use crate::emitter::{NamedEmitter, StarkResponse};

/// One catalog row with the auxiliary columns that are not part of the model.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub id: &'static str,
    /// Intrinsic region width, um.
    pub intrinsic_width_um: f64,
    pub hole_g_factor: f64,
    /// Measured shift magnitude at `v_min`, GHz.
    pub max_shift: f64,
    /// Measured linewidth at `v_min`, GHz.
    pub max_linewidth: f64,
    pub response: StarkResponse<f64>,
}

impl CatalogEntry {
    pub fn named(&self) -> NamedEmitter<f64> {
        NamedEmitter::new(self.id, self.response)
    }

    /// Whether the fitted quadratic terms were kept by model selection.
    pub fn shift_is_quadratic(&self) -> bool {
        self.response.alpha2 != 0.0
    }
}

#[allow(clippy::too_many_arguments)]
const fn row(
    id: &'static str,
    wi: f64,
    gh: f64,
    v_min: f64,
    v_t: f64,
    nu0_offset: f64,
    max_shift: f64,
    alpha2: f64,
    alpha1: f64,
    gamma0: f64,
    max_linewidth: f64,
    gamma2: f64,
    gamma1: f64,
) -> CatalogEntry {
    CatalogEntry {
        id,
        intrinsic_width_um: wi,
        hole_g_factor: gh,
        max_shift,
        max_linewidth,
        response: StarkResponse {
            nu0: 226_000.0 + nu0_offset,
            gamma0,
            v_threshold: v_t,
            alpha1,
            alpha2,
            gamma1,
            gamma2,
            v_min,
            quench: None,
        },
    }
}

const TABLE: [CatalogEntry; 11] = [
    row("A1", 12.5, 3.26, -27.0, -14.0, 105.8, 8.00, 0.0, 0.62, 2.2, 5.86, 0.0, -0.29),
    row("A2", 12.5, 3.01, -14.0, -4.0, 148.18, 29.87, 0.0, 2.99, 1.75, 14.54, 0.0, -1.16),
    row("A3", 12.5, 3.26, -18.0, -4.0, 168.37, 39.86, 0.0, 2.85, 1.52, 17.89, 0.0, -1.01),
    row("B1", 15.0, 1.21, -110.0, -95.0, 118.58, 5.28, 0.0, 0.35, 4.81, 9.77, 0.0, -0.23),
    row("B2", 15.0, 3.29, -120.0, -90.0, 113.13, 3.50, -0.0046, -0.020, 3.5, 5.74, 0.0065, 0.15),
    row("B3", 15.0, 1.43, -120.0, -100.0, 80.38, 19.08, -0.0580, -0.207, 4.4, 11.12, 0.0, -0.339),
    row("C1", 15.0, 2.42, -130.0, -100.0, 115.02, 3.03, 0.0, 0.101, 3.19, 6.19, 0.0050, 0.05),
    row("C2", 15.0, 2.28, -130.0, -90.0, 121.49, 6.47, -0.00515, -0.044, 2.60, 8.12, 0.0045, 0.066),
    row("C3", 15.0, 1.7, -130.0, -110.0, 145.61, 7.67, -0.0232, -0.08, 2.3, 7.74, 0.0, -0.20),
    row("C4", 15.0, 1.41, -130.0, -100.0, 127.07, 4.85, 0.0, 0.162, 3.12, 5.17, 0.0, -0.048),
    row("C5", 15.0, 0.95, -105.0, 0.0, 110.95, 10.84, 0.00074, 0.181, 5.6, 9.14, -0.00191, -0.236),
];

/// All eleven catalogued centres.
pub fn table() -> &'static [CatalogEntry] {
    &TABLE
}

pub fn get(id: &str) -> Option<&'static CatalogEntry> {
    TABLE.iter().find(|e| e.id.eq_ignore_ascii_case(id))
}

fn response(id: &str) -> StarkResponse<f64> {
    get(id).map(|e| e.response).expect("catalog id")
}

pub fn a1() -> StarkResponse<f64> {
    response("A1")
}
pub fn a2() -> StarkResponse<f64> {
    response("A2")
}
pub fn a3() -> StarkResponse<f64> {
    response("A3")
}
pub fn b1() -> StarkResponse<f64> {
    response("B1")
}
pub fn b2() -> StarkResponse<f64> {
    response("B2")
}
pub fn b3() -> StarkResponse<f64> {
    response("B3")
}

/// Switching voltage and width of the measured intensity sigmoid, V.
pub const SIGMOID_SWITCH_V: f64 = -112.0;
pub const SIGMOID_WIDTH_V: f64 = 6.6;
