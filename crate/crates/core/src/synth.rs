//! Seeded synthetic data with known ground truth: PLE scans, cavity reflection
//! spectra, decay transients, shelving sequences and photon timestamp streams.
//!
//! Every generator takes an explicit seed and draws from its own ChaCha20
//! stream, so identical inputs give identical output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{DecayTransient, EmitterRecord, Spectrum, SpectrumMeta};
use crate::error::{Error, Result};
use crate::fit::guess::GLP_EQUAL_WIDTH_FWHM;
use crate::lineshape::{cavity_reflection, double_decay, gauss_lorentz_product, CavityParams, DoubleDecayParams};

/// Shot noise model.
///
/// Models produce rates. With `Poisson`, each point draws `N ~ Poisson(rate *
/// integration_s)` and reports `N / integration_s` with sigma `sqrt(max(N, 1)) /
/// integration_s`. Decay transients use `integration_s = 1` for raw counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    #[default]
    None,
    Poisson {
        integration_s: f64,
    },
}

impl Noise {
    fn validate(&self) -> Result<()> {
        match *self {
            Noise::None => Ok(()),
            Noise::Poisson { integration_s } if integration_s > 0.0 && integration_s.is_finite() => Ok(()),
            Noise::Poisson { .. } => Err(Error::invalid("integration time must be positive")),
        }
    }
}

fn draw(rate: f64, noise: Noise, rng: &mut ChaCha20Rng) -> (f64, Option<f64>) {
    match noise {
        Noise::None => (rate, None),
        Noise::Poisson { integration_s } => {
            let mean = (rate * integration_s).max(0.0);
            let n = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(rng) } else { 0.0 };
            (n / integration_s, Some(n.max(1.0).sqrt() / integration_s))
        }
    }
}

fn sample_all(rates: &[f64], noise: Noise, seed: u64) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (values, sigma): (Vec<f64>, Vec<Option<f64>>) = rates.iter().map(|r| draw(*r, noise, &mut rng)).unzip();
    let sigma = sigma.into_iter().collect::<Option<Vec<f64>>>();
    (values, sigma)
}

/// Evenly spaced samples `start, ..., stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self> {
        let g = Grid { start, stop, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || !(self.stop > self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::invalid("grid needs stop > start and at least two points"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| self.start + h * i as f64).collect()
    }
}

/// Emitters under a common bias, scanned over frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthScenario {
    /// Same records as `emitters.json`.
    pub emitters: Vec<EmitterRecord>,
    pub bias_v: f64,
    /// Peak rate of an unquenched emitter at zero field, 1/s.
    pub peak_rate: f64,
    #[serde(default)]
    pub background_rate: f64,
    #[serde(default)]
    pub noise: Noise,
    pub seed: u64,
    /// Frequency grid, GHz.
    pub grid: Grid,
}

/// Expected PLE rate: one Gauss-Lorentz product per emitter at its biased
/// position, equal Gaussian and Lorentzian widths, plus a flat background.
pub fn ple_rates(s: &SynthScenario, nu: &[f64]) -> Result<Vec<f64>> {
    let peaks = s.emitters.iter().map(|e| e.response()?.peak_profile(s.bias_v)).collect::<Result<Vec<_>>>()?;
    Ok(nu
        .iter()
        .map(|&x| {
            s.background_rate
                + peaks
                    .iter()
                    .map(|p| {
                        let w = p.fwhm / GLP_EQUAL_WIDTH_FWHM;
                        gauss_lorentz_product(x, s.peak_rate * p.relative_amplitude, p.center, w, w)
                    })
                    .sum::<f64>()
        })
        .collect())
}

pub fn gen_ple_scan(s: &SynthScenario) -> Result<Spectrum> {
    s.grid.validate()?;
    s.noise.validate()?;
    if s.emitters.is_empty() {
        return Err(Error::invalid("scenario has no emitters"));
    }
    let nu = s.grid.values();
    let rates = ple_rates(s, &nu)?;
    let (counts, sigma) = sample_all(&rates, s.noise, s.seed);
    let mut out = Spectrum::new(nu, counts, sigma)?;
    out.meta = SpectrumMeta { device_id: None, bias_v: Some(s.bias_v), integration_s: integration(s.noise) };
    Ok(out)
}

fn integration(n: Noise) -> Option<f64> {
    match n {
        Noise::None => None,
        Noise::Poisson { integration_s } => Some(integration_s),
    }
}

/// Cavity reflection spectrum, scaled by `scale` (rate at unit reflectance).
pub fn gen_reflection_scan(
    params: &CavityParams<f64>,
    grid: &Grid,
    scale: f64,
    noise: Noise,
    seed: u64,
) -> Result<Spectrum> {
    grid.validate()?;
    noise.validate()?;
    if !(params.gamma_cav > 0.0) {
        return Err(Error::invalid("gamma_cav must be positive"));
    }
    let nu = grid.values();
    let rates: Vec<f64> = nu.iter().map(|&x| scale * cavity_reflection(x, params)).collect();
    let (counts, sigma) = sample_all(&rates, noise, seed);
    let mut out = Spectrum::new(nu, counts, sigma)?;
    out.meta.integration_s = integration(noise);
    Ok(out)
}

/// Time bins `start + k * bin_width_ns`, `k < bins`; samples are labelled by bin start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bins {
    pub start_ns: f64,
    pub bin_width_ns: f64,
    pub bins: usize,
}

impl Bins {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 || !(self.bin_width_ns > 0.0) || !self.start_ns.is_finite() {
            return Err(Error::invalid("need at least two bins of positive width"));
        }
        Ok(())
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..self.bins).map(|k| self.start_ns + self.bin_width_ns * k as f64).collect()
    }
}

/// `int_l^r a exp(-(t - t0) / tau) dt` over the part of `[l, r]` after `t0`.
fn exp_bin(a: f64, t0: f64, tau: f64, l: f64, r: f64) -> f64 {
    let l = l.max(t0);
    if r <= l || a == 0.0 {
        return 0.0;
    }
    a * tau * ((-(l - t0) / tau).exp() - (-(r - t0) / tau).exp())
}

/// Expected counts per bin of `amplitude exp(-t / tau)` (counts per ns at t = 0)
/// plus `background` counts per bin.
pub fn decay_expected(tau: f64, amplitude: f64, background: f64, bins: &Bins) -> Vec<f64> {
    let w = bins.bin_width_ns;
    bins.edges().iter().map(|&l| exp_bin(amplitude, 0.0, tau, l, l + w) + background).collect()
}

pub fn gen_decay(
    tau: f64,
    amplitude: f64,
    background: f64,
    bins: &Bins,
    noise: Noise,
    seed: u64,
) -> Result<DecayTransient> {
    if !(tau > 0.0) || !(amplitude >= 0.0) || !(background >= 0.0) {
        return Err(Error::invalid("tau must be positive, amplitude and background >= 0"));
    }
    bins.validate()?;
    noise.validate()?;
    let (counts, _) = sample_all(&decay_expected(tau, amplitude, background, bins), noise, seed);
    DecayTransient::new(bins.edges(), counts)
}

/// Bin integral of [`double_decay`]; amplitudes are counts per ns.
pub fn double_decay_expected(p: &DoubleDecayParams<f64>, background: f64, bins: &Bins) -> Vec<f64> {
    let w = bins.bin_width_ns;
    bins.edges()
        .iter()
        .map(|&l| {
            let r = l + w;
            exp_bin(p.a1_fast, p.t1_fast, p.tau1_fast, l, r)
                + exp_bin(p.a1_slow, p.t1_slow, p.tau1_slow, l, r)
                + exp_bin(p.a2, p.t2, p.tau2_fall, l, r)
                - exp_bin(p.a2, p.t2, p.tau2_rise, l, r)
                + background
        })
        .collect()
}

/// One transient per electrical pulse width. The delayed peak starts at
/// `params.t2 + width` and its amplitude decays as `exp(-width / tau_dark)`.
/// Returns `(width, second-peak onset, transient)`.
pub fn gen_shelving_sequence(
    params: &DoubleDecayParams<f64>,
    tau_dark_ns: f64,
    widths_ns: &[f64],
    background: f64,
    bins: &Bins,
    noise: Noise,
    seed: u64,
) -> Result<Vec<(f64, f64, DecayTransient)>> {
    if !(tau_dark_ns > 0.0) {
        return Err(Error::invalid("dark lifetime must be positive"));
    }
    bins.validate()?;
    noise.validate()?;
    widths_ns
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            if !(w >= 0.0) {
                return Err(Error::invalid("pulse widths must be >= 0"));
            }
            let mut p = *params;
            p.t2 = params.t2 + w;
            p.a2 = params.a2 * (-w / tau_dark_ns).exp();
            let expected = double_decay_expected(&p, background, bins);
            let (counts, _) = sample_all(&expected, noise, seed.wrapping_add(k as u64));
            Ok((w, p.t2, DecayTransient::new(bins.edges(), counts)?))
        })
        .collect()
}

/// Pointwise (unbinned) shelving model, for comparison with [`double_decay`].
pub fn shelving_rate(params: &DoubleDecayParams<f64>, tau_dark_ns: f64, width_ns: f64, t: f64) -> f64 {
    let mut p = *params;
    p.t2 = params.t2 + width_ns;
    p.a2 = params.a2 * (-width_ns / tau_dark_ns).exp();
    double_decay(t, &p)
}

/// Pulsed source with two detectors behind a 50:50 splitter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2StreamConfig {
    /// Detected emitter rate per detector, 1/s.
    pub emitter_rate: f64,
    /// Intrinsic zero-delay correlation of the source (0 for an ideal single-photon source).
    pub g2_zero: f64,
    pub background1: f64,
    pub background2: f64,
    /// Repetition period, s.
    pub period_s: f64,
    /// Emission lifetime, s.
    pub lifetime_s: f64,
    pub duration_s: f64,
    pub seed: u64,
}

impl G2StreamConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.emitter_rate, self.g2_zero, self.background1, self.background2];
        if nonneg.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("rates and g2_zero must be >= 0"));
        }
        if !(self.period_s > 0.0 && self.lifetime_s > 0.0 && self.duration_s > 0.0) {
            return Err(Error::invalid("period, lifetime and duration must be positive"));
        }
        let (p1, p2) = self.pulse_probabilities();
        if !(p1 >= 0.0 && p1 + p2 <= 1.0) {
            return Err(Error::invalid("emitter rate too high for the repetition period"));
        }
        Ok(())
    }

    /// Probabilities of one and of two detected emitter photons per pulse.
    ///
    /// With `mu = 2 S theta` detected photons per pulse, two-photon events of
    /// probability `g mu^2 / 2` give the requested zero-delay correlation.
    pub fn pulse_probabilities(&self) -> (f64, f64) {
        let mu = 2.0 * self.emitter_rate * self.period_s;
        let p2 = 0.5 * self.g2_zero * mu * mu;
        (mu - 2.0 * p2, p2)
    }
}

fn poisson_times(rate: f64, duration: f64, rng: &mut ChaCha20Rng, out: &mut Vec<f64>) {
    if rate <= 0.0 {
        return;
    }
    let gap = Exp::new(rate).expect("positive rate");
    let mut t = gap.sample(rng);
    while t < duration {
        out.push(t);
        t += gap.sample(rng);
    }
}

/// Sorted detector timestamps (s) for both detectors.
pub fn gen_g2_stream(c: &G2StreamConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    c.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(c.seed);
    let (p1, p2) = c.pulse_probabilities();
    let p_any = p1 + p2;
    let n_pulses = (c.duration_s / c.period_s).floor() as u64;
    let expected = (c.emitter_rate + c.background1.max(c.background2)) * c.duration_s;
    let mut d1 = Vec::with_capacity((expected * 1.1) as usize + 16);
    let mut d2 = Vec::with_capacity((expected * 1.1) as usize + 16);
    if p_any > 0.0 {
        let skip = Geometric::new(p_any).map_err(|e| Error::invalid(e.to_string()))?;
        let decay = Exp::new(1.0 / c.lifetime_s).expect("positive lifetime");
        let mut k = skip.sample(&mut rng);
        while k < n_pulses {
            let photons = if rng.gen::<f64>() * p_any < p2 { 2 } else { 1 };
            for _ in 0..photons {
                let t = k as f64 * c.period_s + decay.sample(&mut rng);
                if rng.gen::<bool>() {
                    d1.push(t);
                } else {
                    d2.push(t);
                }
            }
            k = k.saturating_add(1).saturating_add(skip.sample(&mut rng));
        }
    }
    poisson_times(c.background1, c.duration_s, &mut rng, &mut d1);
    poisson_times(c.background2, c.duration_s, &mut rng, &mut d2);
    d1.sort_by(|a, b| a.total_cmp(b));
    d2.sort_by(|a, b| a.total_cmp(b));
    Ok((d1, d2))
}

/// Equal background rate on both detectors that makes the raw zero-delay
/// ratio equal `raw_g2` for a source of intrinsic `g2_zero`, emitter rate
/// `emitter_rate` per detector and coincidence window `window_s`.
pub fn background_rate_for_raw_g2(
    emitter_rate: f64,
    g2_zero: f64,
    raw_g2: f64,
    period_s: f64,
    window_s: f64,
) -> Result<f64> {
    if !(raw_g2 >= g2_zero && raw_g2 < 1.0) {
        return Err(Error::domain("raw g2 must lie in [g2_zero, 1)"));
    }
    if !(emitter_rate > 0.0 && period_s > 0.0 && window_s > 0.0) {
        return Err(Error::invalid("rate, period and window must be positive"));
    }
    // background coincidences per peak X d T against signal S^2 theta T, X = 2 S B + B^2
    let r = (raw_g2 - g2_zero) / (1.0 - raw_g2);
    let x = emitter_rate * emitter_rate * period_s * r / window_s;
    Ok(-emitter_rate + (emitter_rate * emitter_rate + x).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::emitter::StarkResponse;
    use crate::fit::correlate;
    use approx::assert_relative_eq;

    fn scenario(emitters: Vec<StarkResponse<f64>>, bias: f64, noise: Noise, grid: Grid) -> SynthScenario {
        let emitters =
            emitters.iter().enumerate().map(|(i, r)| EmitterRecord::from_response(format!("e{i}"), r)).collect();
        SynthScenario { emitters, bias_v: bias, peak_rate: 1000.0, background_rate: 0.0, noise, seed: 11, grid }
    }

    #[test]
    fn single_peak_at_nu0() {
        let r = catalog::a3();
        let grid = Grid::new(r.nu0 - 10.0, r.nu0 + 10.0, 2001).unwrap();
        let s = gen_ple_scan(&scenario(vec![r], 0.0, Noise::None, grid)).unwrap();
        let (i, &m) = s.counts.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!((s.frequency_ghz[i] - r.nu0).abs() < 0.011);
        assert_relative_eq!(m, 1000.0, max_relative = 1e-3);
        assert!(s.sigma.is_none());
    }

    #[test]
    fn biased_peak_moves_and_keeps_fwhm() {
        let r = catalog::a3();
        let grid = Grid::new(r.nu0 - 60.0, r.nu0 + 10.0, 7001).unwrap();
        let s = gen_ple_scan(&scenario(vec![r], -14.0, Noise::None, grid)).unwrap();
        let (i, _) = s.counts.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!((s.frequency_ghz[i] - 226_139.87).abs() < 0.011);
        let p = r.peak_profile(-14.0).unwrap();
        let w = p.fwhm / GLP_EQUAL_WIDTH_FWHM;
        let half = gauss_lorentz_product(p.center + p.fwhm / 2.0, 1.0, p.center, w, w);
        assert!((half - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noiseless_equals_forward_model() {
        let s = scenario(
            vec![catalog::a3(), catalog::a1()],
            -10.0,
            Noise::None,
            Grid::new(226_100.0, 226_200.0, 501).unwrap(),
        );
        let out = gen_ple_scan(&s).unwrap();
        for (x, y) in out.frequency_ghz.iter().zip(&out.counts) {
            assert!((y - ple_rates(&s, &[*x]).unwrap()[0]).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let grid = Grid::new(226_160.0, 226_175.0, 301).unwrap();
        let s = scenario(vec![catalog::a3()], 0.0, Noise::Poisson { integration_s: 0.5 }, grid);
        let a = gen_ple_scan(&s).unwrap();
        let b = gen_ple_scan(&s).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = gen_ple_scan(&SynthScenario { seed: 12, ..s }).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn poisson_chi_square() {
        let grid = Grid::new(226_160.0, 226_175.0, 400).unwrap();
        let mut s = scenario(vec![catalog::a3()], 0.0, Noise::Poisson { integration_s: 10.0 }, grid);
        s.background_rate = 50.0;
        let out = gen_ple_scan(&s).unwrap();
        let model = ple_rates(&s, &out.frequency_ghz).unwrap();
        let chi2: f64 = out.counts.iter().zip(&model).map(|(n, m)| (n * 10.0 - m * 10.0).powi(2) / (m * 10.0)).sum();
        // Wilson-Hilferty 99.9 % quantile for 400 degrees of freedom
        let k = 400.0f64;
        let q = k * (1.0 - 2.0 / (9.0 * k) + 3.090 * (2.0 / (9.0 * k)).sqrt()).powi(3);
        assert!(chi2 < q, "chi2 {chi2} > {q}");
    }

    #[test]
    fn decay_ratio_is_one_over_e() {
        let bins = Bins { start_ns: 0.0, bin_width_ns: 0.5, bins: 400 };
        let d = gen_decay(20.0, 100.0, 0.0, &bins, Noise::None, 0).unwrap();
        assert_relative_eq!(d.counts[40] / d.counts[0], (-1.0f64).exp(), max_relative = 1e-12);
        let flat = gen_decay(20.0, 0.0, 3.0, &bins, Noise::Poisson { integration_s: 1.0 }, 5).unwrap();
        let mean = flat.counts.iter().sum::<f64>() / 400.0;
        assert!((mean - 3.0).abs() < 0.3);
    }

    #[test]
    fn double_decay_bins_integrate_the_model() {
        let p = DoubleDecayParams {
            a1_fast: 50.0,
            t1_fast: 100.0,
            tau1_fast: 5.0,
            a1_slow: 10.0,
            t1_slow: 100.0,
            tau1_slow: 60.0,
            a2: 8.0,
            t2: 400.0,
            tau2_fall: 40.0,
            tau2_rise: 8.0,
        };
        let bins = Bins { start_ns: 0.0, bin_width_ns: 1.0, bins: 3000 };
        let counts = double_decay_expected(&p, 0.0, &bins);
        let total: f64 = counts.iter().sum();
        let analytic = 50.0 * 5.0 + 10.0 * 60.0 + p.second_peak_area();
        assert_relative_eq!(total, analytic, max_relative = 1e-9);
        let k = 450;
        assert_relative_eq!(
            counts[k],
            crate::quadrature::integrate(|t| double_decay(t, &p), k as f64, k as f64 + 1.0, 1e-12, 0.0).value,
            max_relative = 1e-9
        );
        let seq = gen_shelving_sequence(&p, 228.0, &[800.0, 1000.0], 0.0, &bins, Noise::None, 1).unwrap();
        assert_eq!(seq[1].1, 1400.0);
        let area = |c: &[f64], from: usize| c[from..].iter().sum::<f64>();
        let ratio = area(&seq[1].2.counts, 1150) / area(&seq[0].2.counts, 1150);
        // the first decay tail still contributes ~2e-6 of the window
        assert_relative_eq!(ratio, (-200.0f64 / 228.0).exp(), max_relative = 1e-5);
    }

    #[test]
    fn background_for_target_raw() {
        let b = background_rate_for_raw_g2(1e4, 0.09, 0.34, 100e-9, 40e-9).unwrap();
        assert!((b - 3955.0).abs() < 2.0, "{b}");
        assert_eq!(background_rate_for_raw_g2(1e4, 0.09, 0.09, 100e-9, 40e-9).unwrap(), 0.0);
    }

    #[test]
    fn ideal_source_has_empty_zero_peak() {
        let c = G2StreamConfig {
            emitter_rate: 2e4,
            g2_zero: 0.0,
            background1: 0.0,
            background2: 0.0,
            period_s: 100e-9,
            lifetime_s: 2e-9,
            duration_s: 20.0,
            seed: 3,
        };
        let (t1, t2) = gen_g2_stream(&c).unwrap();
        assert!((t1.len() as f64 / 20.0 - 2e4).abs() < 500.0);
        let h = correlate(&t1, &t2, 100e-9, 40e-9, 5).unwrap();
        assert_eq!(h.area(0), Some(0.0));
        assert!(h.side_mean() > 500.0);
        let again = gen_g2_stream(&c).unwrap();
        assert_eq!(again.0, t1);
    }
}
