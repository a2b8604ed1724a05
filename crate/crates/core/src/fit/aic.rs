//! Akaike information criterion and threshold-based selection.

use super::FitResult;
use crate::error::{Error, Result};

/// Improvement a richer model must achieve before it is preferred.
pub const AIC_THRESHOLD: f64 = 5.0;

/// `n ln(rss / n) + 2k`.
pub fn aic(rss: f64, n: usize, k: usize) -> f64 {
    let n_f = n as f64;
    n_f * (rss / n_f).ln() + 2.0 * k as f64
}

/// Walk the candidates from fewest to most free parameters, switching to a
/// richer model only when it lowers the AIC by more than `threshold`.
pub fn aic_select(fits: &[FitResult], threshold: f64) -> Result<&FitResult> {
    let first = fits.first().ok_or_else(|| Error::invalid("aic_select needs at least one fit"))?;
    if fits.iter().any(|f| f.n_points != first.n_points) {
        return Err(Error::invalid("aic_select candidates were fitted to different data"));
    }
    let mut order: Vec<&FitResult> = fits.iter().collect();
    order.sort_by_key(|f| f.n_free());
    let mut chosen = order[0];
    for cand in &order[1..] {
        if cand.n_free() > chosen.n_free() && chosen.aic - cand.aic > threshold {
            chosen = cand;
        }
    }
    Ok(chosen)
}
