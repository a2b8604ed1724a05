//! Starting-point heuristics.
//!
//! Peaks: baseline from the 20th percentile, centre at the smoothed maximum,
//! width from a half-maximum scan. Decays: log-linear regression over the part
//! of the trace well above the baseline.

use crate::lineshape::{voigt, LineShapeKind};

/// Rough description of a single dominant peak.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakGuess {
    pub baseline: f64,
    pub amplitude: f64,
    pub center: f64,
    pub fwhm: f64,
}

fn smooth3(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(v.len() - 1);
    v[i] + (v[j] - v[i]) * (pos - i as f64)
}

/// Half-maximum scan on a smoothed copy of `y`.
pub fn peak(x: &[f64], y: &[f64]) -> PeakGuess {
    let n = x.len();
    if n == 0 {
        return PeakGuess { baseline: 0.0, amplitude: 0.0, center: 0.0, fwhm: 1.0 };
    }
    let s = smooth3(y);
    let baseline = percentile(y, 0.2);
    let (imax, &smax) = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let amplitude = (smax - baseline).max(0.0);
    let half = baseline + amplitude / 2.0;
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imax;
        for i in range {
            if s[i] < half {
                let (x0, x1, y0, y1) = (x[prev], x[i], s[prev], s[i]);
                return Some(if y0 == y1 { x1 } else { x0 + (half - y0) * (x1 - x0) / (y1 - y0) });
            }
            prev = i;
        }
        None
    };
    let right = cross(&mut (imax + 1..n));
    let left = cross(&mut (0..imax).rev());
    let span = (x[n - 1] - x[0]).abs().max(f64::MIN_POSITIVE);
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (x[imax] - l),
        (None, Some(r)) => 2.0 * (r - x[imax]),
        (None, None) => span / 4.0,
    };
    let step = if n > 1 { span / (n - 1) as f64 } else { 1.0 };
    PeakGuess { baseline, amplitude, center: x[imax], fwhm: fwhm.abs().max(step) }
}

/// FWHM of the Gauss-Lorentz product when both widths equal 1.
pub const GLP_EQUAL_WIDTH_FWHM: f64 = 0.676_017_425_170_825;

/// Initial parameters for a peak shape, optionally followed by a baseline.
pub fn peak_params(kind: LineShapeKind, x: &[f64], y: &[f64], baseline: bool) -> Vec<f64> {
    let g = peak(x, y);
    let amp = if g.amplitude > 0.0 { g.amplitude } else { 1.0 };
    let mut p = match kind {
        LineShapeKind::GaussLorentzProduct => {
            let w = g.fwhm / GLP_EQUAL_WIDTH_FWHM;
            vec![amp, g.center, w, w]
        }
        LineShapeKind::Voigt | LineShapeKind::SkewedVoigt => {
            let gl = 0.5 * g.fwhm;
            let gg = ((g.fwhm - 0.5346 * gl).powi(2) - 0.2166 * gl * gl).max(1e-12).sqrt();
            let sigma = gg / crate::scalar::fwhm_per_sigma::<f64>();
            let area = amp / voigt(0.0, 1.0, 0.0, sigma, gl);
            let mut v = vec![area, g.center, sigma, gl];
            if kind == LineShapeKind::SkewedVoigt {
                v.push(0.0);
            }
            v
        }
        _ => panic!("peak_params called for non-peak kind {kind}"),
    };
    if baseline {
        p.push(g.baseline);
    }
    p
}

/// `(amplitude, tau[, baseline])` from the trace tail.
pub fn decay_params(t: &[f64], y: &[f64], baseline: bool) -> Vec<f64> {
    let n = t.len();
    let bg = if baseline && n >= 10 {
        let tail = &y[n - n / 10..];
        tail.iter().sum::<f64>() / tail.len() as f64
    } else {
        0.0
    };
    let (imax, _) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap_or((0, &0.0));
    let amp = (y.get(imax).copied().unwrap_or(1.0) - bg).max(f64::MIN_POSITIVE);
    let t0 = t.get(imax).copied().unwrap_or(0.0);
    // weighted log-linear regression where the signal is well above background
    let (mut sw, mut st, mut sl, mut stt, mut stl) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in imax..n {
        let v = y[i] - bg;
        if v > 0.1 * amp {
            let w = v;
            let l = v.ln();
            sw += w;
            st += w * t[i];
            sl += w * l;
            stt += w * t[i] * t[i];
            stl += w * t[i] * l;
        }
    }
    let denom = sw * stt - st * st;
    let span = t.last().copied().unwrap_or(1.0) - t.first().copied().unwrap_or(0.0);
    let mut tau = span / 3.0;
    let mut a0 = amp;
    if denom > 0.0 {
        let slope = (sw * stl - st * sl) / denom;
        if slope < 0.0 {
            tau = -1.0 / slope;
            let icpt = (sl - slope * st) / sw;
            a0 = icpt.exp();
        }
    }
    if !(a0.is_finite() && a0 > 0.0) {
        a0 = amp * (t0 / tau).exp();
    }
    let mut p = vec![a0, tau.max(f64::MIN_POSITIVE)];
    if baseline {
        p.push(bg);
    }
    p
}
