//! Chip-scale planning: fraction of an inhomogeneous ensemble inside a tuning
//! window, and pairing of emitters at common frequencies.

use std::collections::HashMap;

use mwmatching::{Matching, SENTINEL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emitter::StarkResponse;
use crate::error::{Error, Result};
use crate::interference::p_exc_symmetric;

/// Normalised inhomogeneous distribution on a frequency grid, interpreted as
/// piecewise linear between grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousPdf {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub background_level: f64,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Background-subtract, clamp at zero and normalise to unit trapezoid area.
pub fn pdf_from_spectrum(frequency: &[f64], intensity: &[f64], background: f64) -> Result<InhomogeneousPdf> {
    if frequency.len() < 2 || frequency.len() != intensity.len() {
        return Err(Error::InsufficientData("spectrum needs at least two points".into()));
    }
    if !(background >= 0.0) {
        return Err(Error::invalid("background must be >= 0"));
    }
    if frequency.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("frequency grid must be strictly increasing"));
    }
    let clipped: Vec<f64> = intensity.iter().map(|v| (v - background).max(0.0)).collect();
    let total = trapezoid(frequency, &clipped);
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::domain("spectrum is zero everywhere after background subtraction"));
    }
    Ok(InhomogeneousPdf {
        grid: frequency.to_vec(),
        density: clipped.iter().map(|v| v / total).collect(),
        background_level: background,
    })
}

impl InhomogeneousPdf {
    pub fn span(&self) -> f64 {
        self.grid[self.grid.len() - 1] - self.grid[0]
    }

    /// Linear interpolation, zero outside the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g[0] || x > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|v| *v <= x).clamp(1, g.len() - 1);
        let t = (x - g[i - 1]) / (g[i] - g[i - 1]);
        self.density[i - 1] + t * (self.density[i] - self.density[i - 1])
    }

    fn prefix(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.grid.len()];
        for i in 1..self.grid.len() {
            acc[i] = acc[i - 1] + 0.5 * (self.grid[i] - self.grid[i - 1]) * (self.density[i - 1] + self.density[i]);
        }
        acc
    }

    fn cdf_with(&self, prefix: &[f64], x: f64) -> f64 {
        let g = &self.grid;
        if x <= g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return prefix[g.len() - 1];
        }
        let i = g.partition_point(|v| *v <= x).clamp(1, g.len() - 1);
        let h = x - g[i - 1];
        let slope = (self.density[i] - self.density[i - 1]) / (g[i] - g[i - 1]);
        prefix[i - 1] + h * self.density[i - 1] + 0.5 * slope * h * h
    }

    /// Cumulative distribution, exact for the piecewise-linear density.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_with(&self.prefix(), x)
    }

    fn window_mass(&self, prefix: &[f64], start: f64, window: f64) -> f64 {
        self.cdf_with(prefix, start + window) - self.cdf_with(prefix, start)
    }
}

/// Largest probability mass in any frequency window of width `window`.
///
/// Between consecutive breakpoints (window start or end on a grid point) the
/// mass is quadratic in the start position, so the maximum is found exactly
/// from the breakpoints and the interior stationary points.
pub fn tunable_fraction(pdf: &InhomogeneousPdf, window: f64) -> Result<f64> {
    if !(window > 0.0) {
        return Err(Error::invalid("window must be positive"));
    }
    if window >= pdf.span() {
        return Ok(1.0);
    }
    let g = &pdf.grid;
    let (lo, hi) = (g[0] - window, g[g.len() - 1]);
    let mut starts: Vec<f64> = g.iter().flat_map(|&x| [x, x - window]).filter(|s| *s >= lo && *s <= hi).collect();
    starts.sort_by(|a, b| a.total_cmp(b));
    starts.dedup();
    let prefix = pdf.prefix();
    let mut best = 0.0f64;
    for s in &starts {
        best = best.max(pdf.window_mass(&prefix, *s, window));
    }
    for w in starts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // derivative of the mass is density(s + window) - density(s), linear on (a, b)
        let da = pdf.density_at(a + window) - pdf.density_at(a);
        let db = pdf.density_at(b + window) - pdf.density_at(b);
        if da > 0.0 && db < 0.0 {
            let s = a + (b - a) * da / (da - db);
            best = best.max(pdf.window_mass(&prefix, s, window));
        }
    }
    Ok(best.clamp(0.0, 1.0))
}

/// Pair objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Sum of `ln(p_exc / p_floor)`.
    #[default]
    LogSum,
    /// Sum of `p_exc`.
    Sum,
}

/// Feasibility and objective settings for [`plan_pairs`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConstraints {
    /// Per-emitter limit on reverse bias, V (negative). Missing ids use `v_min`.
    pub max_reverse_bias: HashMap<String, f64>,
    pub min_neutral_fraction: f64,
    pub red_shift_only: bool,
    pub objective: Objective,
    /// Pairs with lower joint excitation probability are not considered.
    pub p_floor: f64,
}

impl Default for PlanConstraints {
    fn default() -> Self {
        PlanConstraints {
            max_reverse_bias: HashMap::new(),
            min_neutral_fraction: (-1.0f64).exp(),
            red_shift_only: true,
            objective: Objective::LogSum,
            p_floor: 1e-6,
        }
    }
}

impl PlanConstraints {
    fn weight(&self, p: f64) -> f64 {
        match self.objective {
            Objective::LogSum => (p / self.p_floor).ln(),
            Objective::Sum => p,
        }
    }
}

/// Best operating point for one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCandidate {
    pub a: usize,
    pub b: usize,
    pub target_ghz: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub p_exc: f64,
    pub neutral_a: f64,
    pub neutral_b: f64,
    pub weight: f64,
}

/// One pair of a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedPair {
    pub emitter_a: String,
    pub emitter_b: String,
    pub target_ghz: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub p_exc: f64,
    pub neutral_a: f64,
    pub neutral_b: f64,
    pub quenched_a: bool,
    pub quenched_b: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningPlan {
    pub pairs: Vec<PlannedPair>,
    pub unpaired: Vec<String>,
    pub objective_value: f64,
    pub exact: bool,
}

/// Above this many emitters the matching is greedy.
pub const EXACT_LIMIT: usize = 64;
const FREQ_SAMPLES: usize = 129;

struct Operating {
    v: f64,
    width: f64,
    neutral: f64,
}

fn operate(r: &StarkResponse<f64>, v_lo: f64, nu: f64) -> Option<Operating> {
    let v = r.voltage_for_shift_within(nu - r.nu0, v_lo).ok()?;
    Some(Operating { v, width: r.stark_linewidth(v).ok()?, neutral: r.neutral_fraction(v).ok()? })
}

fn reachable(r: &StarkResponse<f64>, v_lo: f64, red_only: bool) -> Option<(f64, f64)> {
    let (lo, hi) = r.shift_range(v_lo.max(r.v_min)).ok()?;
    let hi = if red_only { hi.min(0.0) } else { hi };
    Some((r.nu0 + lo, r.nu0 + hi))
}

/// Best common frequency for emitters `a` and `b`, or `None` if no reachable
/// frequency satisfies the constraints.
pub fn pair_candidate(
    emitters: &[(String, StarkResponse<f64>)],
    a: usize,
    b: usize,
    c: &PlanConstraints,
) -> Option<PairCandidate> {
    let (ida, ra) = &emitters[a];
    let (idb, rb) = &emitters[b];
    let lim = |id: &String, r: &StarkResponse<f64>| c.max_reverse_bias.get(id).copied().unwrap_or(r.v_min).max(r.v_min);
    let (la, lb) = (lim(ida, ra), lim(idb, rb));
    let (a_lo, a_hi) = reachable(ra, la, c.red_shift_only)?;
    let (b_lo, b_hi) = reachable(rb, lb, c.red_shift_only)?;
    let (lo, hi) = (a_lo.max(b_lo), a_hi.min(b_hi));
    if lo > hi {
        return None;
    }
    let eval = |nu: f64| -> Option<PairCandidate> {
        let oa = operate(ra, la, nu)?;
        let ob = operate(rb, lb, nu)?;
        if oa.neutral < c.min_neutral_fraction || ob.neutral < c.min_neutral_fraction {
            return None;
        }
        let p = p_exc_symmetric(oa.width, ob.width, 0.0);
        if !(p >= c.p_floor) {
            return None;
        }
        Some(PairCandidate {
            a,
            b,
            target_ghz: nu,
            v_a: oa.v,
            v_b: ob.v,
            p_exc: p,
            neutral_a: oa.neutral,
            neutral_b: ob.neutral,
            weight: c.weight(p),
        })
    };
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return eval(hi);
    }
    let nus: Vec<f64> = (0..FREQ_SAMPLES).map(|k| lo + (hi - lo) * k as f64 / (FREQ_SAMPLES - 1) as f64).collect();
    let score = |nu: f64| eval(nu).map_or(f64::NEG_INFINITY, |p| p.weight);
    let scores: Vec<f64> = nus.iter().map(|&nu| score(nu)).collect();
    let (k, _) = scores.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1))?;
    if scores[k] == f64::NEG_INFINITY {
        return None;
    }
    let mut best = eval(nus[k])?;
    // golden-section refinement around the best sample
    let (mut x0, mut x3) = (nus[k.saturating_sub(1)], nus[(k + 1).min(FREQ_SAMPLES - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = x3 - phi * (x3 - x0);
    let mut x2 = x0 + phi * (x3 - x0);
    let (mut f1, mut f2) = (score(x1), score(x2));
    for _ in 0..60 {
        if f1 >= f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - phi * (x3 - x0);
            f1 = score(x1);
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + phi * (x3 - x0);
            f2 = score(x2);
        }
    }
    for x in [x1, x2] {
        if let Some(p) = eval(x) {
            if p.weight > best.weight {
                best = p;
            }
        }
    }
    Some(best)
}

/// All feasible pair candidates, evaluated in parallel, in `(a, b)` order.
pub fn pair_candidates(emitters: &[(String, StarkResponse<f64>)], c: &PlanConstraints) -> Vec<PairCandidate> {
    let n = emitters.len();
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    idx.par_iter().filter_map(|&(a, b)| pair_candidate(emitters, a, b, c)).filter(|p| p.weight > 0.0).collect()
}

/// Largest integer weight passed to the matching solver. The blossom
/// algorithm doubles weights internally, so this stays well inside `i32`.
const WEIGHT_SCALE_MAX: f64 = 5e8;

fn exact_matching(n: usize, cands: &[PairCandidate]) -> Vec<usize> {
    let wmax = cands.iter().map(|p| p.weight).fold(0.0f64, f64::max);
    if wmax <= 0.0 {
        return Vec::new();
    }
    let scale = WEIGHT_SCALE_MAX / wmax;
    let edges: Vec<(usize, usize, i32)> =
        cands.iter().map(|p| (p.a, p.b, ((p.weight * scale).round() as i32).max(1))).collect();
    let mates = Matching::new(edges).solve();
    let mut chosen = Vec::new();
    for (k, p) in cands.iter().enumerate() {
        if p.a < mates.len() && mates[p.a] == p.b && mates[p.a] != SENTINEL {
            chosen.push(k);
        }
    }
    debug_assert!(chosen.len() * 2 <= n);
    chosen
}

fn greedy_matching(n: usize, cands: &[PairCandidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&i, &j| cands[j].weight.total_cmp(&cands[i].weight).then(i.cmp(&j)));
    let mut used = vec![false; n];
    let mut chosen = Vec::new();
    for k in order {
        let p = &cands[k];
        if !used[p.a] && !used[p.b] {
            used[p.a] = true;
            used[p.b] = true;
            chosen.push(k);
        }
    }
    chosen
}

/// Pair emitters to maximise the summed pair weight.
pub fn plan_pairs(emitters: &[(String, StarkResponse<f64>)], c: &PlanConstraints) -> Result<TuningPlan> {
    if emitters.len() < 2 {
        return Err(Error::InsufficientData("planning needs at least two emitters".into()));
    }
    if !(c.p_floor > 0.0 && c.p_floor < 1.0) {
        return Err(Error::invalid("p_floor must lie in (0, 1)"));
    }
    for (id, r) in emitters {
        r.validate().map_err(|e| Error::invalid(format!("emitter {id}: {e}")))?;
    }
    let n = emitters.len();
    let cands = pair_candidates(emitters, c);
    let exact = n <= EXACT_LIMIT;
    let mut chosen = if exact { exact_matching(n, &cands) } else { greedy_matching(n, &cands) };
    chosen.sort_by_key(|&k| (cands[k].a, cands[k].b));
    let threshold = (-1.0f64).exp();
    let mut paired = vec![false; n];
    let pairs: Vec<PlannedPair> = chosen
        .iter()
        .map(|&k| {
            let p = &cands[k];
            paired[p.a] = true;
            paired[p.b] = true;
            PlannedPair {
                emitter_a: emitters[p.a].0.clone(),
                emitter_b: emitters[p.b].0.clone(),
                target_ghz: p.target_ghz,
                v_a: p.v_a,
                v_b: p.v_b,
                p_exc: p.p_exc,
                neutral_a: p.neutral_a,
                neutral_b: p.neutral_b,
                quenched_a: p.neutral_a < threshold,
                quenched_b: p.neutral_b < threshold,
            }
        })
        .collect();
    let objective_value = chosen.iter().map(|&k| cands[k].weight).sum();
    let unpaired = (0..n).filter(|i| !paired[*i]).map(|i| emitters[i].0.clone()).collect();
    Ok(TuningPlan { pairs, unpaired, objective_value, exact })
}
