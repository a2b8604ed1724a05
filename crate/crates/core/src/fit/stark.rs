//! Tuning and broadening laws from a bias series of fitted peaks.

use serde::{Deserialize, Serialize};

use super::{aic_select, nls_fit, peak_summary, FitData, FitOptions, FitResult, ModelKind, AIC_THRESHOLD};
use crate::emitter::StarkResponse;
use crate::error::{Error, Result};

/// Peak centre and width at one bias, with optional 1-sigma errors (0 = unknown).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkPoint {
    pub voltage: f64,
    pub center: f64,
    pub center_err: f64,
    pub width: f64,
    pub width_err: f64,
}

/// Selected shift and width laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkFit {
    pub response: StarkResponse<f64>,
    pub shift_fit: FitResult,
    pub width_fit: FitResult,
    pub shift_quadratic: bool,
    pub width_quadratic: bool,
    pub n_points: usize,
}

/// Polynomial in `x = v - v_threshold` chosen by AIC between degree 1 and 2.
fn select_poly(x: &[f64], y: &[f64], err: &[f64]) -> Result<(FitResult, bool)> {
    let weighted = err.iter().all(|e| *e > 0.0);
    let data = if weighted {
        FitData::new(x.to_vec(), y.to_vec(), err.to_vec())?
    } else {
        FitData::unweighted(x.to_vec(), y.to_vec())?
    };
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let opts = FitOptions::default();
    let lin = fit_poly(&data, 1, mean, &opts)?;
    if x.len() < 4 {
        return Ok((lin, false));
    }
    let quad = fit_poly(&data, 2, mean, &opts)?;
    let candidates = [lin, quad];
    let is_quad = aic_select(&candidates, AIC_THRESHOLD)?.n_free() == 3;
    let [lin, quad] = candidates;
    Ok((if is_quad { quad } else { lin }, is_quad))
}

fn fit_poly(data: &FitData, degree: usize, mean: f64, opts: &FitOptions) -> Result<FitResult> {
    let mut init = vec![0.0; degree + 1];
    init[0] = mean;
    nls_fit(&ModelKind::Polynomial { degree }, data, &init, opts)
}

/// Fit shift and width laws to points inside `fit_range = (v_min, v_threshold)`.
pub fn fit_stark_points(points: &[StarkPoint], fit_range: (f64, f64)) -> Result<StarkFit> {
    let (v_min, v_t) = fit_range;
    if !(v_min < v_t && v_t <= 0.0) {
        return Err(Error::invalid(format!("fit range [{v_min}, {v_t}] must satisfy v_min < v_threshold <= 0")));
    }
    let inside: Vec<&StarkPoint> = points.iter().filter(|p| p.voltage >= v_min && p.voltage <= v_t).collect();
    if inside.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} voltages inside [{v_min}, {v_t}]; need at least 3",
            inside.len()
        )));
    }
    let x: Vec<f64> = inside.iter().map(|p| p.voltage - v_t).collect();
    let c: Vec<f64> = inside.iter().map(|p| p.center).collect();
    let ce: Vec<f64> = inside.iter().map(|p| p.center_err).collect();
    let w: Vec<f64> = inside.iter().map(|p| p.width).collect();
    let we: Vec<f64> = inside.iter().map(|p| p.width_err).collect();
    let (shift_fit, shift_quadratic) = select_poly(&x, &c, &ce)?;
    let (width_fit, width_quadratic) = select_poly(&x, &w, &we)?;
    let coef = |f: &FitResult, i: usize| f.params.get(i).copied().unwrap_or(0.0);
    let response = StarkResponse {
        nu0: coef(&shift_fit, 0),
        gamma0: coef(&width_fit, 0),
        v_threshold: v_t,
        alpha1: coef(&shift_fit, 1),
        alpha2: coef(&shift_fit, 2),
        gamma1: coef(&width_fit, 1),
        gamma2: coef(&width_fit, 2),
        v_min,
        quench: None,
    };
    response.validate()?;
    Ok(StarkFit { response, shift_fit, width_fit, shift_quadratic, width_quadratic, n_points: inside.len() })
}

/// As [`fit_stark_points`], taking centre and FWHM from peak fits.
pub fn fit_stark_series(series: &[(f64, FitResult)], fit_range: (f64, f64)) -> Result<StarkFit> {
    let points = series
        .iter()
        .map(|(v, fit)| {
            let s = peak_summary(fit)?;
            Ok(StarkPoint {
                voltage: *v,
                center: s.center,
                center_err: if s.center_err.is_finite() { s.center_err } else { 0.0 },
                width: s.fwhm,
                width_err: if s.fwhm_err.is_finite() { s.fwhm_err } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    fit_stark_points(&points, fit_range)
}
