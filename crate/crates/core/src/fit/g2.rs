//! Pulsed second-order correlation: coincidence histograms and background
//! correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Background term `(B1 N2 + B2 N1 - B1 B2) d T` and normalisation
/// `(N1 - B1)(N2 - B2) theta T`. Rates in 1/s, times in s.
pub fn g2_normalization(n1: f64, n2: f64, b1: f64, b2: f64, bin: f64, period: f64, total: f64) -> Result<(f64, f64)> {
    if !(b1 >= 0.0 && b2 >= 0.0) {
        return Err(Error::invalid("background rates must be >= 0"));
    }
    if !(bin > 0.0 && period > 0.0 && total > 0.0) {
        return Err(Error::invalid("bin width, period and total time must be positive"));
    }
    let background = (b1 * n2 + b2 * n1 - b1 * b2) * bin * total;
    let norm = (n1 - b1) * (n2 - b2) * period * total;
    if !(norm > 0.0) {
        return Err(Error::domain(format!(
            "normalisation {norm} is not positive; detector rates must exceed backgrounds"
        )));
    }
    Ok((background, norm))
}

/// `g2(n) = (area_n - background) / norm` for every peak area.
#[allow(clippy::too_many_arguments)]
pub fn g2_correct(
    areas: &[f64],
    n1: f64,
    n2: f64,
    b1: f64,
    b2: f64,
    bin: f64,
    period: f64,
    total: f64,
) -> Result<Vec<f64>> {
    let (bg, norm) = g2_normalization(n1, n2, b1, b2, bin, period, total)?;
    Ok(areas.iter().map(|a| (a - bg) / norm).collect())
}

/// Coincidence counts in windows of width `bin` centred on multiples of the period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    /// Peak index `n` for delay `n * period`, from `-max_peak` to `max_peak`.
    pub peaks: Vec<i64>,
    pub areas: Vec<f64>,
    pub bin: f64,
    pub period: f64,
}

impl CoincidenceHistogram {
    pub fn area(&self, n: i64) -> Option<f64> {
        self.peaks.iter().position(|p| *p == n).map(|i| self.areas[i])
    }

    /// Mean area of the non-zero-delay peaks.
    pub fn side_mean(&self) -> f64 {
        let side: Vec<f64> = self.peaks.iter().zip(&self.areas).filter(|(p, _)| **p != 0).map(|(_, a)| *a).collect();
        side.iter().sum::<f64>() / side.len().max(1) as f64
    }

    /// Zero-delay area over the mean side-peak area.
    pub fn raw_g2_zero(&self) -> f64 {
        self.area(0).unwrap_or(0.0) / self.side_mean()
    }
}

/// Start-stop histogram of `t2 - t1` over all pairs, binned by nearest peak.
/// Timestamps must be sorted ascending.
pub fn correlate(t1: &[f64], t2: &[f64], period: f64, bin: f64, max_peak: i64) -> Result<CoincidenceHistogram> {
    if !(period > 0.0 && bin > 0.0 && bin <= period) {
        return Err(Error::invalid("require 0 < bin <= period"));
    }
    if t1.windows(2).any(|w| w[1] < w[0]) || t2.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("timestamps must be sorted"));
    }
    let reach = (max_peak as f64 + 0.5) * period;
    let n_peaks = (2 * max_peak + 1) as usize;
    let mut counts = vec![0u64; n_peaks];
    let mut start = 0usize;
    for &a in t1 {
        while start < t2.len() && t2[start] < a - reach {
            start += 1;
        }
        let mut j = start;
        while j < t2.len() && t2[j] <= a + reach {
            let dt = t2[j] - a;
            let n = (dt / period).round();
            if (dt - n * period).abs() <= bin / 2.0 && n.abs() <= max_peak as f64 {
                counts[(n as i64 + max_peak) as usize] += 1;
            }
            j += 1;
        }
    }
    Ok(CoincidenceHistogram {
        peaks: (-max_peak..=max_peak).collect(),
        areas: counts.into_iter().map(|c| c as f64).collect(),
        bin,
        period,
    })
}

/// Corrected histogram summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Correction {
    pub raw_g2_zero: f64,
    pub corrected: Vec<f64>,
    pub corrected_g2_zero: f64,
    pub background: f64,
    pub normalization: f64,
}

impl CoincidenceHistogram {
    /// Apply [`g2_correct`] with measured rates `n1, n2`, backgrounds `b1, b2`
    /// and acquisition time `total`.
    pub fn corrected(&self, n1: f64, n2: f64, b1: f64, b2: f64, total: f64) -> Result<G2Correction> {
        let (background, normalization) = g2_normalization(n1, n2, b1, b2, self.bin, self.period, total)?;
        let corrected = g2_correct(&self.areas, n1, n2, b1, b2, self.bin, self.period, total)?;
        let zero = self.peaks.iter().position(|p| *p == 0).map_or(f64::NAN, |i| corrected[i]);
        Ok(G2Correction {
            raw_g2_zero: self.raw_g2_zero(),
            corrected,
            corrected_g2_zero: zero,
            background,
            normalization,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn no_background_is_normalisation() {
        let g = g2_correct(&[10.0, 40.0], 100.0, 200.0, 0.0, 0.0, 1e-8, 1e-7, 10.0).unwrap();
        let norm = 100.0 * 200.0 * 1e-7 * 10.0;
        assert_relative_eq!(g[0], 10.0 / norm, epsilon = 1e-15);
        assert_relative_eq!(g[1], 40.0 / norm, epsilon = 1e-15);
        let g2 = g2_correct(&[10.0], 100.0, 200.0, 0.0, 0.0, 1e-8, 2e-7, 10.0).unwrap();
        assert_relative_eq!(g2[0], g[0] / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn rates_below_background() {
        assert!(g2_correct(&[1.0], 10.0, 10.0, 10.0, 1.0, 1e-8, 1e-7, 1.0).is_err());
    }

    #[test]
    fn histogram_bins_by_period() {
        let t1 = [0.0, 1.0];
        let t2 = [0.001, 0.499, 1.01, 2.2];
        let h = correlate(&t1, &t2, 1.0, 0.1, 1).unwrap();
        assert_eq!(h.peaks, vec![-1, 0, 1]);
        // pairs: (0,0.001)->0, (0,1.01)->1, (1,0.001)->-1, (1,1.01)->0
        assert_eq!(h.areas, vec![1.0, 2.0, 1.0]);
        assert_eq!(h.raw_g2_zero(), 2.0);
    }
}
