//! Derived quantities: peak summaries and areas, cavity Q, hole-burning
//! saturation, dark-state lifetime and rise time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::guess;
use super::{nls_fit, FitData, FitModel, FitOptions, FitResult, ModelKind};
use crate::error::{Error, Result};
use crate::lineshape::{DoubleDecayParams, LineShapeKind};

/// Propagate the fit covariance through `g` by central differences.
fn delta_method(fit: &FitResult, g: impl Fn(&[f64]) -> f64) -> f64 {
    let p = &fit.params;
    let m = p.len();
    let mut grad = vec![0.0; m];
    let mut q = p.clone();
    for i in 0..m {
        if !fit.free[i] {
            continue;
        }
        let h = 1e-6 * p[i].abs().max(fit.covariance[i][i].max(0.0).sqrt()).max(1e-9);
        q[i] = p[i] + h;
        let up = g(&q);
        q[i] = p[i] - h;
        let dn = g(&q);
        q[i] = p[i];
        grad[i] = (up - dn) / (2.0 * h);
    }
    let mut var = 0.0;
    for i in 0..m {
        for j in 0..m {
            var += grad[i] * fit.covariance[i][j] * grad[j];
        }
    }
    var.max(0.0).sqrt()
}

/// FWHM of a unimodal shape by bisection on each side of `center`.
fn numeric_fwhm(f: impl Fn(f64) -> f64, center: f64, guess: f64) -> f64 {
    let peak = f(center);
    let half = peak / 2.0;
    let side = |dir: f64| {
        let mut hi = guess.abs().max(1e-12);
        let mut n = 0;
        while f(center + dir * hi) > half && n < 200 {
            hi *= 2.0;
            n += 1;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(center + dir * mid) > half {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    side(1.0) + side(-1.0)
}

/// Centre, FWHM and height of a fitted peak with 1-sigma errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub center: f64,
    pub center_err: f64,
    pub fwhm: f64,
    pub fwhm_err: f64,
    pub amplitude: f64,
    pub amplitude_err: f64,
}

fn shape_of(fit: &FitResult) -> Result<LineShapeKind> {
    match fit.model {
        ModelKind::Shape { kind, .. }
            if matches!(
                kind,
                LineShapeKind::GaussLorentzProduct | LineShapeKind::Voigt | LineShapeKind::SkewedVoigt
            ) =>
        {
            Ok(kind)
        }
        other => Err(Error::invalid(format!("{} is not a peak model", other.label()))),
    }
}

fn peak_fwhm(kind: LineShapeKind, p: &[f64]) -> f64 {
    let n = kind.n_params();
    let shape = &p[..n];
    match kind {
        LineShapeKind::SkewedVoigt => {
            let c = mode(kind, shape);
            numeric_fwhm(|x| kind.eval(x, shape), c, p[2] + p[3])
        }
        _ => numeric_fwhm(|x| kind.eval(x, shape), p[1], p[2].min(p[3])),
    }
}

/// Location of the maximum; the centre parameter except for skewed shapes.
fn mode(kind: LineShapeKind, p: &[f64]) -> f64 {
    if kind != LineShapeKind::SkewedVoigt || p[4] == 0.0 {
        return p[1];
    }
    // golden-section search for the maximum around the centre
    let w = p[2] + p[3];
    let (mut a, mut b) = (p[1] - 3.0 * w, p[1] + 3.0 * w);
    let f = |x: f64| kind.eval(x, p);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
        if (b - a).abs() < 1e-12 * w {
            break;
        }
    }
    0.5 * (a + b)
}

/// Centre, FWHM and height of a fitted peak.
pub fn peak_summary(fit: &FitResult) -> Result<PeakSummary> {
    let kind = shape_of(fit)?;
    let n = kind.n_params();
    let center_of = |p: &[f64]| mode(kind, &p[..n]);
    let height_of = |p: &[f64]| kind.eval(mode(kind, &p[..n]), &p[..n]);
    let fwhm_of = |p: &[f64]| peak_fwhm(kind, p);
    Ok(PeakSummary {
        center: center_of(&fit.params),
        center_err: delta_method(fit, center_of),
        fwhm: fwhm_of(&fit.params),
        fwhm_err: delta_method(fit, fwhm_of),
        amplitude: height_of(&fit.params),
        amplitude_err: delta_method(fit, height_of),
    })
}

fn peak_bounds(kind: LineShapeKind, x: &[f64], baseline: bool) -> Vec<(f64, f64)> {
    let (lo, hi) = (x.first().copied().unwrap_or(0.0), x.last().copied().unwrap_or(0.0));
    let span = (hi - lo).abs().max(f64::MIN_POSITIVE);
    let wmax = 10.0 * span;
    let mut b = match kind {
        LineShapeKind::GaussLorentzProduct | LineShapeKind::Voigt => {
            vec![(0.0, f64::INFINITY), (lo - span, hi + span), (1e-9 * span, wmax), (1e-9 * span, wmax)]
        }
        LineShapeKind::SkewedVoigt => {
            vec![(0.0, f64::INFINITY), (lo - span, hi + span), (1e-9 * span, wmax), (1e-9 * span, wmax), (-50.0, 50.0)]
        }
        _ => unreachable!(),
    };
    if baseline {
        b.push((f64::NEG_INFINITY, f64::INFINITY));
    }
    b
}

/// Fit one peak shape (with optional constant baseline) using the default guesses.
pub fn fit_peak(data: &FitData, kind: LineShapeKind, baseline: bool) -> Result<FitResult> {
    if !matches!(kind, LineShapeKind::GaussLorentzProduct | LineShapeKind::Voigt | LineShapeKind::SkewedVoigt) {
        return Err(Error::invalid(format!("{kind} is not a peak model")));
    }
    let (lo, hi) = data.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), y| (l.min(*y), h.max(*y)));
    if !(hi > lo) {
        return Err(Error::InsufficientData("spectrum is flat; there is no peak to fit".into()));
    }
    let model = ModelKind::Shape { kind, baseline };
    let mut init = guess::peak_params(kind, &data.x, &data.y, baseline);
    let bounds = peak_bounds(kind, &data.x, baseline);
    for (v, (lo, hi)) in init.iter_mut().zip(&bounds) {
        *v = v.clamp(*lo, *hi);
    }
    nls_fit(&model, data, &init, &FitOptions::default().with_bounds(bounds))
}

/// Single-exponential decay fit, optionally with a constant background.
pub fn fit_decay(data: &FitData, baseline: bool) -> Result<FitResult> {
    let model = ModelKind::Shape { kind: LineShapeKind::SingleExp, baseline };
    let init = guess::decay_params(&data.x, &data.y, baseline);
    let mut bounds = vec![(0.0, f64::INFINITY), (1e-12, f64::INFINITY)];
    if baseline {
        bounds.push((f64::NEG_INFINITY, f64::INFINITY));
    }
    nls_fit(&model, data, &init, &FitOptions::default().with_bounds(bounds))
}

/// Integrated area of the dominant peak from the two-stage skewed Voigt fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakArea {
    pub area: f64,
    pub uncertainty: f64,
    pub skew: f64,
    pub low_confidence: bool,
    pub notes: Vec<String>,
    pub stage1: FitResult,
    pub stage2: FitResult,
}

/// Stage 1 fixes the skew at zero to pin the centre; its parameters seed a
/// stage 2 fit with the skew free. The area is the fitted `area` parameter.
pub fn peak_area_skewed_voigt(data: &FitData) -> Result<PeakArea> {
    let kind = LineShapeKind::SkewedVoigt;
    let model = ModelKind::with_baseline(kind);
    let init = guess::peak_params(kind, &data.x, &data.y, true);
    let bounds = peak_bounds(kind, &data.x, true);
    let mut fixed = vec![false; 6];
    fixed[4] = true;
    let opts1 = FitOptions::default().with_bounds(bounds.clone()).with_fixed(fixed);
    let stage1 = nls_fit(&model, data, &init, &opts1)?;
    let opts2 = FitOptions::default().with_bounds(bounds);
    let stage2 = match nls_fit(&model, data, &stage1.params, &opts2) {
        Ok(f) => f,
        Err(Error::NonConvergence { best, .. }) if best.rss <= stage1.rss => *best,
        Err(e) => return Err(e),
    };
    let mut notes = Vec::new();
    let chi2 = stage2.reduced_chi2();
    if chi2 > 3.0 {
        notes.push(format!("reduced chi-square {chi2:.2} exceeds 3"));
    }
    if let Some(msg) = secondary_peak(data, &stage2) {
        notes.push(msg);
    }
    if !stage2.converged {
        notes.push("stage 2 did not converge; using its best parameters".into());
    }
    let area = stage2.params[0];
    let uncertainty = stage2.error_of("area").unwrap_or(f64::NAN);
    Ok(PeakArea { area, uncertainty, skew: stage2.params[4], low_confidence: !notes.is_empty(), notes, stage1, stage2 })
}

/// Look for a second local maximum of comparable prominence in the data.
fn secondary_peak(data: &FitData, fit: &FitResult) -> Option<String> {
    let n = data.len();
    if n < 7 {
        return None;
    }
    let base = fit.params[5];
    // 5-point smoothing suppresses isolated shot-noise spikes
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n - 1);
            data.y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64 - base
        })
        .collect();
    let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return None;
    }
    let noise = data.sigma.iter().map(|v| v * v).sum::<f64>().sqrt() / (n as f64).sqrt() / 5f64.sqrt();
    let mut maxima = Vec::new();
    for i in 1..n - 1 {
        if s[i] >= s[i - 1] && s[i] > s[i + 1] && s[i] > 0.25 * top {
            maxima.push(i);
        }
    }
    // require a real dip between neighbouring maxima
    for w in maxima.windows(2) {
        let (a, b) = (w[0], w[1]);
        let valley = s[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
        let lower = s[a].min(s[b]);
        if lower - valley > (0.1 * lower).max(3.0 * noise) {
            return Some(format!(
                "secondary peak near {:.4} with {:.0}% of the main height",
                data.x[if s[a] < s[b] { a } else { b }],
                100.0 * lower / top
            ));
        }
    }
    None
}

/// Cavity reflection fit with derived quality factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityFit {
    pub q_factor: f64,
    pub q_err: f64,
    pub nu_cav: f64,
    pub gamma_cav: f64,
    pub fit: FitResult,
}

/// Three stages: a fringe-free dip, a periodogram of the remaining ripple
/// for the fringe frequency and phase, then all parameters together.
pub fn fit_cavity(data: &FitData) -> Result<CavityFit> {
    let x = &data.x;
    let n = x.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("{n} points; cavity fit needs at least 10")));
    }
    let model = ModelKind::shape(LineShapeKind::CavityComposite);
    // dip guess from the inverted trace
    let inv: Vec<f64> = data.y.iter().map(|v| -v).collect();
    let g = guess::peak(x, &inv);
    let y_edge = guess::percentile(&data.y, 0.8).max(f64::MIN_POSITIVE);
    let dip_min = -(g.baseline + g.amplitude);
    let y0 = y_edge.sqrt();
    // y0 (y0 - a0) = dip_min
    let a0 = (y0 - dip_min / y0).max(0.0);
    let span = (x[n - 1] - x[0]).abs();
    let init1 = vec![0.0, 0.0, 0.0, y0, 0.0, a0, g.center, g.fwhm.max(span / n as f64)];
    let fixed1 = vec![true, true, true, false, false, false, false, false];
    let bounds = vec![
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        (f64::NEG_INFINITY, f64::INFINITY),
        (x[0] - span, x[n - 1] + span),
        (1e-9 * span, 100.0 * span),
    ];
    let opts1 = FitOptions::default().with_bounds(bounds.clone()).with_fixed(fixed1);
    let stage1 = match nls_fit(&model, data, &init1, &opts1) {
        Ok(f) => f,
        Err(Error::NonConvergence { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let p1 = &stage1.params;
    // ripple q = y/(B - L) - B = A sin(f d + phi)
    let (c, y0, y1, a0, gc) = (p1[6], p1[3], p1[4], p1[5], p1[7]);
    let mut d = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for ((&xi, &yi), &si) in x.iter().zip(&data.y).zip(&data.sigma) {
        let di = xi - c;
        let b = y0 + y1 * di;
        let hw = gc / 2.0;
        let l = a0 * hw * hw / (di * di + hw * hw);
        let denom = b - l;
        if denom.abs() > 1e-3 * y0.abs() {
            d.push(di);
            q.push(yi / denom - b);
            w.push((denom / si).powi(2));
        }
    }
    let step = span / (n - 1) as f64;
    let f_max = std::f64::consts::PI / (2.0 * step);
    let f_min = std::f64::consts::PI / span;
    let mut best = (0.0, 0.0, 0.0, 0.0);
    let n_f = 4000;
    for k in 0..=n_f {
        let f = f_min * (f_max / f_min).powf(k as f64 / n_f as f64);
        // weighted sin/cos least squares at this frequency
        let (mut ss, mut cc, mut sc, mut sq, mut cq) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..d.len() {
            let (s, co) = (f * d[i]).sin_cos();
            ss += w[i] * s * s;
            cc += w[i] * co * co;
            sc += w[i] * s * co;
            sq += w[i] * s * q[i];
            cq += w[i] * co * q[i];
        }
        let det = ss * cc - sc * sc;
        if det <= 0.0 {
            continue;
        }
        let a = (sq * cc - cq * sc) / det;
        let b = (cq * ss - sq * sc) / det;
        let power = a * sq + b * cq;
        if power > best.0 {
            best = (power, f, a, b);
        }
    }
    let (_, f, a_s, b_c) = best;
    // a sin + b cos = A sin(f d + phi)
    let amp = (a_s * a_s + b_c * b_c).sqrt();
    let phi = b_c.atan2(a_s);
    let mut init2 = p1.clone();
    init2[0] = amp;
    init2[1] = f;
    init2[2] = phi;
    let opts2 = FitOptions::default().with_bounds(bounds);
    let fit = if amp > 0.0 {
        match nls_fit(&model, data, &init2, &opts2) {
            Ok(f) => f,
            // no identifiable ripple: the fringe-free fit stands
            Err(Error::NonConvergence { .. }) if stage1.converged => stage1,
            Err(e) => return Err(e),
        }
    } else if stage1.converged {
        stage1
    } else {
        return Err(Error::NonConvergence { reason: "cavity dip fit did not converge".into(), best: Box::new(stage1) });
    };
    let q_of = |p: &[f64]| p[6] / p[7];
    Ok(CavityFit {
        q_factor: q_of(&fit.params),
        q_err: delta_method(&fit, q_of),
        nu_cav: fit.params[6],
        gamma_cav: fit.params[7],
        fit,
    })
}

struct HoleModel;

impl FitModel for HoleModel {
    fn n_params(&self) -> usize {
        2
    }
    fn param_names(&self) -> Vec<String> {
        vec!["hom_linewidth".into(), "inverse_p_sat".into()]
    }
    fn eval(&self, p_total: f64, p: &[f64]) -> f64 {
        p[0] * (1.0 + (1.0 + p_total * p[1]).max(0.0).sqrt())
    }
    fn kind(&self) -> ModelKind {
        ModelKind::Custom
    }
}

/// Homogeneous linewidth and saturation power from a hole-width power series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoleBurningFit {
    pub hom_linewidth: f64,
    pub hom_linewidth_err: f64,
    /// Hole width extrapolated to zero power, twice the homogeneous linewidth.
    pub zero_power_hole_width: f64,
    /// Infinite when the data show no saturation.
    pub p_sat: f64,
    pub p_sat_err: f64,
    pub unbounded: bool,
    pub fit: FitResult,
}

/// Fit `w(P) = hom (1 + sqrt(1 + P/P_sat))` over the inverse saturation power
/// `s = 1/P_sat >= 0`, so that power-independent widths land on `s = 0`.
pub fn fit_holeburning(powers: &[f64], widths: &[f64], sigma: Option<&[f64]>) -> Result<HoleBurningFit> {
    if powers.len() != widths.len() {
        return Err(Error::invalid("powers and widths must have equal lengths"));
    }
    if powers.iter().any(|p| !(*p >= 0.0)) || widths.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::invalid("powers must be >= 0 and widths > 0"));
    }
    let mut distinct = powers.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} distinct powers; hole-burning fit needs at least 3",
            distinct.len()
        )));
    }
    let data = match sigma {
        Some(s) => FitData::new(powers.to_vec(), widths.to_vec(), s.to_vec())?,
        None => FitData::unweighted(powers.to_vec(), widths.to_vec())?,
    };
    let (imin, _) = powers.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let (imax, &pmax) = powers.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let hom0 = widths[imin] / 2.0;
    let s0 = (((widths[imax] / hom0 - 1.0).powi(2) - 1.0) / pmax.max(f64::MIN_POSITIVE)).max(0.0);
    let bounds = vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)];
    let opts = FitOptions::default().with_bounds(bounds);
    let fit = nls_fit(&HoleModel, &data, &[hom0, s0], &opts)?;
    let (hom, s) = (fit.params[0], fit.params[1]);
    let unbounded = s * pmax < 1e-9;
    let err = fit.errors();
    Ok(HoleBurningFit {
        hom_linewidth: hom,
        hom_linewidth_err: err[0],
        zero_power_hole_width: 2.0 * hom,
        p_sat: if unbounded { f64::INFINITY } else { 1.0 / s },
        p_sat_err: if unbounded { f64::INFINITY } else { err[1] / (s * s) },
        unbounded,
        fit,
    })
}

struct ExpModel;

impl FitModel for ExpModel {
    fn n_params(&self) -> usize {
        2
    }
    fn param_names(&self) -> Vec<String> {
        vec!["amplitude".into(), "rate".into()]
    }
    fn eval(&self, w: f64, p: &[f64]) -> f64 {
        p[0] * (-p[1] * w).exp()
    }
    fn kind(&self) -> ModelKind {
        ModelKind::Custom
    }
}

/// Dark-state lifetime from second-peak area versus electrical pulse width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DarkLifetimeFit {
    /// Infinite when the areas do not decay.
    pub tau: f64,
    pub tau_err: f64,
    pub amplitude: f64,
    pub unbounded: bool,
    pub low_confidence: bool,
    pub notes: Vec<String>,
    pub fit: Option<FitResult>,
}

/// Fit `area = A exp(-w / tau)` through the decay rate `1/tau >= 0`.
/// Two points are solved exactly.
pub fn fit_dark_lifetime(widths: &[f64], areas: &[f64], sigma: Option<&[f64]>) -> Result<DarkLifetimeFit> {
    if widths.len() != areas.len() {
        return Err(Error::invalid("widths and areas must have equal lengths"));
    }
    if widths.len() < 2 {
        return Err(Error::InsufficientData("dark lifetime needs at least two pulse widths".into()));
    }
    let mut idx: Vec<usize> = (0..widths.len()).collect();
    idx.sort_by(|&a, &b| widths[a].total_cmp(&widths[b]));
    let w: Vec<f64> = idx.iter().map(|&i| widths[i]).collect();
    let a: Vec<f64> = idx.iter().map(|&i| areas[i]).collect();
    let span = w[w.len() - 1] - w[0];
    if !(span > 0.0) {
        return Err(Error::InsufficientData("pulse widths must differ".into()));
    }
    let mut notes = Vec::new();
    if w.len() == 2 {
        if !(a[0] > 0.0 && a[1] > 0.0) {
            return Err(Error::domain("areas must be positive for the two-point solution"));
        }
        let ratio = a[0] / a[1];
        let unbounded = ratio <= 1.0;
        if ratio < 1.0 {
            notes.push("area increases with pulse width".into());
        }
        let rate = if unbounded { 0.0 } else { ratio.ln() / span };
        return Ok(DarkLifetimeFit {
            tau: if unbounded { f64::INFINITY } else { 1.0 / rate },
            tau_err: 0.0,
            amplitude: a[0] * (rate * w[0]).exp(),
            unbounded,
            low_confidence: ratio < 1.0,
            notes,
            fit: None,
        });
    }
    let data = match sigma {
        Some(s) => {
            let s: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
            FitData::new(w.clone(), a.clone(), s)?
        }
        None => FitData::unweighted(w.clone(), a.clone())?,
    };
    // log-linear start over positive areas
    let pos: Vec<(f64, f64)> = w.iter().zip(&a).filter(|(_, y)| **y > 0.0).map(|(x, y)| (*x, y.ln())).collect();
    let mut rate0 = 1.0 / span;
    let mut amp0 = a.iter().copied().fold(0.0, f64::max);
    if pos.len() >= 2 {
        let n = pos.len() as f64;
        let mx = pos.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pos.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pos.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pos.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            rate0 = (-sxy / sxx).max(0.0);
            amp0 = (my + rate0 * mx).exp();
        }
    }
    let opts = FitOptions::default().with_bounds(vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)]);
    let fit = nls_fit(&ExpModel, &data, &[amp0.max(f64::MIN_POSITIVE), rate0], &opts)?;
    let (amp, rate) = (fit.params[0], fit.params[1]);
    let rate_err = fit.errors()[1];
    let unbounded = rate * span < 1e-6;
    // monotonicity against the noise level
    let noise: Vec<f64> = match sigma {
        Some(_) => data.sigma.clone(),
        None => vec![fit.residual_norm / ((w.len() - 2) as f64).sqrt(); w.len()],
    };
    for i in 0..a.len() - 1 {
        let tol = 3.0 * (noise[i].powi(2) + noise[i + 1].powi(2)).sqrt();
        if a[i + 1] - a[i] > tol {
            notes.push(format!("area rises between widths {} and {}", w[i], w[i + 1]));
        }
    }
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let rel_rms = fit.residual_norm / (w.len() as f64).sqrt() / scale.max(f64::MIN_POSITIVE);
    if sigma.is_none() && rel_rms > 0.2 {
        notes.push(format!("poor exponential description (relative rms {rel_rms:.2})"));
    }
    if sigma.is_some() && fit.reduced_chi2() > 5.0 {
        notes.push(format!("reduced chi-square {:.2}", fit.reduced_chi2()));
    }
    Ok(DarkLifetimeFit {
        tau: if unbounded { f64::INFINITY } else { 1.0 / rate },
        tau_err: if unbounded { f64::INFINITY } else { rate_err / (rate * rate) },
        amplitude: amp,
        unbounded,
        low_confidence: !notes.is_empty(),
        notes,
        fit: Some(fit),
    })
}

/// Second-peak areas `a2 (tau_fall - tau_rise)` with 1-sigma errors, one per
/// transient. Each entry pairs the second-pulse onset with its data; the onset
/// times are held at their known values and `template` seeds the rest.
pub fn second_peak_areas(transients: &[(f64, FitData)], template: &DoubleDecayParams<f64>) -> Result<Vec<(f64, f64)>> {
    let model = ModelKind::shape(LineShapeKind::DoubleDecay);
    let mut fixed = vec![false; 10];
    fixed[1] = true;
    fixed[4] = true;
    fixed[7] = true;
    let inf = f64::INFINITY;
    let bounds = vec![
        (0.0, inf),
        (-inf, inf),
        (1e-12, inf),
        (0.0, inf),
        (-inf, inf),
        (1e-12, inf),
        (0.0, inf),
        (-inf, inf),
        (1e-12, inf),
        (1e-12, inf),
    ];
    let opts = FitOptions::default().with_bounds(bounds).with_fixed(fixed);
    transients
        .par_iter()
        .map(|(t2, data)| {
            let mut p = *template;
            p.t2 = *t2;
            let fit = nls_fit(&model, data, &p.to_vec(), &opts)?;
            let area = |q: &[f64]| q[6] * (q[8] - q[9]);
            Ok((area(&fit.params), delta_method(&fit, area)))
        })
        .collect()
}

/// 10-90 % rise time of a step response with linear interpolation between
/// samples. Baseline is the first sample, plateau the mean of the last 5 %.
pub fn rise_time_10_90(t: &[f64], y: &[f64]) -> Result<f64> {
    let n = t.len();
    if n != y.len() {
        return Err(Error::invalid("time and value arrays differ in length"));
    }
    if n < 10 {
        return Err(Error::InsufficientData(format!("{n} samples; rise time needs at least 10")));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times must be strictly increasing"));
    }
    let tail = (n / 20).max(3);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let baseline = y[0];
    let plateau = mean(&y[n - tail..]);
    let before = mean(&y[n - 2 * tail..n - tail]);
    let delta = plateau - baseline;
    if delta == 0.0 || (plateau - before).abs() > 0.02 * delta.abs() {
        return Err(Error::domain("trace does not reach a plateau"));
    }
    let crossing = |level: f64| -> Result<f64> {
        let target = baseline + level * delta;
        for i in 1..n {
            let (a, b) = ((y[i - 1] - target) * delta.signum(), (y[i] - target) * delta.signum());
            if a < 0.0 && b >= 0.0 {
                return Ok(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
            }
        }
        Err(Error::domain(format!("trace never crosses {:.0}% of the step", level * 100.0)))
    };
    Ok(crossing(0.9)? - crossing(0.1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::{gauss_lorentz_product, skewed_voigt};
    use approx::assert_relative_eq;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn glp_equal_width_constant() {
        let f = numeric_fwhm(|x| gauss_lorentz_product(x, 1.0, 0.0, 1.0, 1.0), 0.0, 0.5);
        assert!((f - guess::GLP_EQUAL_WIDTH_FWHM).abs() < 1e-9, "{f}");
    }

    #[test]
    fn peak_summary_on_clean_peak() {
        let x = grid(-10.0, 10.0, 201);
        let y: Vec<f64> = x.iter().map(|&v| 3.0 + gauss_lorentz_product(v, 100.0, 0.4, 2.0, 2.0)).collect();
        let data = FitData::poisson(x, y).unwrap();
        let fit = fit_peak(&data, LineShapeKind::GaussLorentzProduct, true).unwrap();
        let s = peak_summary(&fit).unwrap();
        assert_relative_eq!(s.center, 0.4, epsilon = 1e-7);
        assert_relative_eq!(s.amplitude, 100.0, max_relative = 1e-7);
        assert_relative_eq!(s.fwhm, 2.0 * guess::GLP_EQUAL_WIDTH_FWHM, max_relative = 1e-3);
    }

    #[test]
    fn symmetric_peak_area() {
        let x = grid(-15.0, 15.0, 301);
        let y: Vec<f64> = x.iter().map(|&v| 10.0 + skewed_voigt(v, 500.0, 0.2, 1.0, 0.8, 0.0)).collect();
        let data = FitData::poisson(x, y).unwrap();
        let r = peak_area_skewed_voigt(&data).unwrap();
        assert!(r.skew.abs() < 0.05);
        assert_relative_eq!(r.area, 500.0, max_relative = 0.02);
        assert!(!r.low_confidence, "{:?}", r.notes);
    }

    #[test]
    fn skewed_peak_area() {
        let x = grid(-15.0, 15.0, 301);
        let y: Vec<f64> = x.iter().map(|&v| 10.0 + skewed_voigt(v, 500.0, 0.2, 1.0, 0.8, 0.5)).collect();
        let data = FitData::poisson(x, y).unwrap();
        let r = peak_area_skewed_voigt(&data).unwrap();
        assert_relative_eq!(r.area, 500.0, max_relative = 0.02);
        assert_relative_eq!(r.skew, 0.5, max_relative = 0.02);
    }

    #[test]
    fn overlapping_peaks_are_flagged() {
        let x = grid(-15.0, 15.0, 301);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 10.0 + skewed_voigt(v, 500.0, -1.6, 0.6, 0.5, 0.0) + skewed_voigt(v, 400.0, 1.6, 0.6, 0.5, 0.0))
            .collect();
        let data = FitData::poisson(x, y).unwrap();
        let r = peak_area_skewed_voigt(&data).unwrap();
        assert!(r.low_confidence);
    }

    #[test]
    fn holeburning_recovery() {
        let powers = [0.5, 2.0, 5.0, 14.0, 40.0, 100.0, 400.0];
        let widths: Vec<f64> = powers.iter().map(|&p| 15.5 * (1.0 + (1.0 + p / 14.0f64).sqrt())).collect();
        let r = fit_holeburning(&powers, &widths, None).unwrap();
        assert_relative_eq!(r.hom_linewidth, 15.5, max_relative = 1e-9);
        assert_relative_eq!(r.p_sat, 14.0, max_relative = 1e-8);
        assert_relative_eq!(r.zero_power_hole_width, 31.0, max_relative = 1e-9);
        assert!(!r.unbounded);
    }

    #[test]
    fn holeburning_flat_is_unbounded() {
        let r = fit_holeburning(&[1.0, 10.0, 100.0, 300.0], &[31.0; 4], None).unwrap();
        assert!(r.unbounded);
        assert!(r.p_sat.is_infinite());
        assert_relative_eq!(r.hom_linewidth, 15.5, max_relative = 1e-9);
        assert!(matches!(fit_holeburning(&[1.0], &[31.0], None), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_holeburning(&[1.0, 1.0, 2.0], &[31.0; 3], None), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn dark_lifetime_cases() {
        let w = [800.0f64, 1000.0];
        let a: Vec<f64> = w.iter().map(|x| 5.0 * (-x / 228.0f64).exp()).collect();
        let r = fit_dark_lifetime(&w, &a, None).unwrap();
        assert_relative_eq!(r.tau, 228.0, max_relative = 1e-12);
        let w: Vec<f64> = (0..11).map(|i| 800.0 + 100.0 * i as f64).collect();
        let a: Vec<f64> = w.iter().map(|x| 5e3 * (-x / 228.0f64).exp()).collect();
        let r = fit_dark_lifetime(&w, &a, None).unwrap();
        assert_relative_eq!(r.tau, 228.0, max_relative = 1e-8);
        assert!(!r.low_confidence);
        let r = fit_dark_lifetime(&w, &vec![3.0; w.len()], None).unwrap();
        assert!(r.unbounded && r.tau.is_infinite());
        let zig: Vec<f64> = (0..11).map(|i| if i % 2 == 0 { 1.0 } else { 5.0 }).collect();
        assert!(fit_dark_lifetime(&w, &zig, None).unwrap().low_confidence);
    }

    #[test]
    fn rise_time_cases() {
        let t: Vec<f64> = (0..4000).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|v| 1.0 - (-v / 72.8f64).exp()).collect();
        let r = rise_time_10_90(&t, &y).unwrap();
        assert!((r - 72.8 * 9f64.ln()).abs() < 0.05, "{r}");
        let ramp: Vec<f64> = t.iter().map(|v| (v / 100.0).min(1.0)).collect();
        assert_relative_eq!(rise_time_10_90(&t, &ramp).unwrap(), 80.0, epsilon = 1e-9);
        let step: Vec<f64> = t.iter().map(|v| if *v >= 10.0 { 1.0 } else { 0.0 }).collect();
        assert!(rise_time_10_90(&t, &step).unwrap() <= 0.5);
        let unfinished: Vec<f64> = t.iter().map(|v| v / 2000.0).collect();
        assert!(rise_time_10_90(&t, &unfinished).is_err());
    }
}
