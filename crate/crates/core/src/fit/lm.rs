//! Bounded Levenberg-Marquardt with Marquardt scaling.

use nalgebra::{DMatrix, DVector};

use super::{aic, FitData, FitModel, FitResult};
use crate::error::{Error, Result};

/// Solver controls. Defaults: 200 iterations, gradient cosine 1e-10.
#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Inclusive box bounds per parameter; `None` means unbounded.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Parameters held at their initial value.
    pub fixed: Option<Vec<bool>>,
    pub max_iterations: usize,
    pub gtol: f64,
    pub xtol: f64,
    pub ftol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { bounds: None, fixed: None, max_iterations: 200, gtol: 1e-10, xtol: 1e-12, ftol: 1e-14 }
    }
}

impl FitOptions {
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = Some(fixed);
        self
    }
}

const FD_STEP: f64 = 6.055_454_452_393_343e-6; // cbrt(f64::EPSILON)

struct Problem<'a> {
    model: &'a dyn FitModel,
    data: &'a FitData,
    lo: Vec<f64>,
    hi: Vec<f64>,
    free: Vec<usize>,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64]) -> Option<DVector<f64>> {
        let d = self.data;
        let mut r = DVector::zeros(d.len());
        for i in 0..d.len() {
            let v = (d.y[i] - self.model.eval(d.x[i], p)) / d.sigma[i];
            if !v.is_finite() {
                return None;
            }
            r[i] = v;
        }
        Some(r)
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let n = self.data.len();
        let scales = self.model.step_scales(p);
        let mut j = DMatrix::zeros(n, self.free.len());
        let mut q = p.to_vec();
        for (col, &idx) in self.free.iter().enumerate() {
            let h = FD_STEP * scales[idx];
            let up = (p[idx] + h).min(self.hi[idx]);
            let dn = (p[idx] - h).max(self.lo[idx]);
            let width = up - dn;
            if width <= 0.0 {
                continue;
            }
            q[idx] = up;
            let fu: Vec<f64> = self.data.x.iter().map(|&x| self.model.eval(x, &q)).collect();
            q[idx] = dn;
            for i in 0..n {
                let fd = self.model.eval(self.data.x[i], &q);
                // residual = (y - f) / sigma
                let v = -(fu[i] - fd) / (width * self.data.sigma[i]);
                j[(i, col)] = if v.is_finite() { v } else { 0.0 };
            }
            q[idx] = p[idx];
        }
        j
    }

    fn clamp(&self, p: &mut [f64]) {
        for ((v, lo), hi) in p.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.max(*lo).min(*hi);
        }
    }
}

/// Fit `model` to `data` from `init`. Returns [`Error::NonConvergence`] with the
/// best parameters found when the iteration cap is hit, no further progress is
/// possible, or the parameters are not identifiable at the solution.
///
/// Count data ([`FitData::poisson`]) are refitted with `sigma^2` equal to the
/// fitted model until the parameters settle. The fixed point solves the
/// Poisson likelihood equations, which removes the low bias of weighting by
/// observed counts.
pub fn nls_fit(model: &dyn FitModel, data: &FitData, init: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let mut fit = fit_once(model, data, init, opts)?;
    if !data.poisson {
        return Ok(fit);
    }
    let mut w = data.clone();
    for _ in 0..POISSON_REWEIGHTS {
        for (s, &x) in w.sigma.iter_mut().zip(&data.x) {
            *s = model.eval(x, &fit.params).max(POISSON_VARIANCE_FLOOR).sqrt();
        }
        let next = fit_once(model, &w, &fit.params, opts)?;
        let settled =
            next.params.iter().zip(&fit.params).all(|(a, b)| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1e-300));
        fit = next;
        if settled {
            break;
        }
    }
    Ok(fit)
}

const POISSON_REWEIGHTS: usize = 20;
const POISSON_VARIANCE_FLOOR: f64 = 1e-3;

fn fit_once(model: &dyn FitModel, data: &FitData, init: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let m = model.n_params();
    if init.len() != m {
        return Err(Error::invalid(format!("expected {m} initial parameters, got {}", init.len())));
    }
    let (lo, hi): (Vec<f64>, Vec<f64>) = match &opts.bounds {
        Some(b) if b.len() == m => b.iter().copied().unzip(),
        Some(b) => return Err(Error::invalid(format!("expected {m} bounds, got {}", b.len()))),
        None => (vec![f64::NEG_INFINITY; m], vec![f64::INFINITY; m]),
    };
    let fixed = match &opts.fixed {
        Some(f) if f.len() == m => f.clone(),
        Some(f) => return Err(Error::invalid(format!("expected {m} fixed flags, got {}", f.len()))),
        None => vec![false; m],
    };
    for i in 0..m {
        if !init[i].is_finite() || init[i] < lo[i] || init[i] > hi[i] {
            return Err(Error::invalid(format!(
                "initial value {} for parameter {i} outside bounds [{}, {}]",
                init[i], lo[i], hi[i]
            )));
        }
    }
    let free: Vec<usize> = (0..m).filter(|&i| !fixed[i]).collect();
    let k = free.len();
    if data.len() < k + 1 {
        return Err(Error::InsufficientData(format!(
            "{} points for {k} free parameters; need at least {}",
            data.len(),
            k + 1
        )));
    }
    let prob = Problem { model, data, lo, hi, free };

    let mut p = init.to_vec();
    let mut r = prob.residuals(&p).ok_or_else(|| Error::invalid("model is not finite at the initial parameters"))?;
    let mut cost = r.norm_squared();
    let data_scale: f64 = data.y.iter().zip(&data.sigma).map(|(y, s)| (y / s).powi(2)).sum();

    let mut lambda = -1.0;
    let mut nu = 2.0;
    let mut iterations = 0;
    let mut outcome: std::result::Result<(), String> = Err("iteration limit reached".into());

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = prob.jacobian(&p);
        let g_full = jac.tr_mul(&r);
        let a_full = jac.tr_mul(&jac);
        let rnorm = cost.sqrt();
        if cost <= 1e-30 * data_scale.max(f64::MIN_POSITIVE) {
            outcome = Ok(());
            break;
        }
        // parameters pinned at a bound with the descent direction pointing outward
        let active: Vec<usize> = (0..k)
            .filter(|&c| {
                let idx = prob.free[c];
                let descent = -g_full[c];
                !((p[idx] <= prob.lo[idx] && descent < 0.0) || (p[idx] >= prob.hi[idx] && descent > 0.0))
            })
            .collect();
        let cosine = active
            .iter()
            .map(|&c| {
                let cn = a_full[(c, c)].sqrt();
                if cn == 0.0 {
                    0.0
                } else {
                    g_full[c].abs() / (rnorm * cn)
                }
            })
            .fold(0.0, f64::max);
        if cosine <= opts.gtol {
            outcome = Ok(());
            break;
        }
        let na = active.len();
        let g = DVector::from_iterator(na, active.iter().map(|&c| g_full[c]));
        let a = DMatrix::from_fn(na, na, |i, j| a_full[(active[i], active[j])]);
        let max_diag = (0..na).map(|i| a[(i, i)]).fold(0.0, f64::max);
        let diag: Vec<f64> = (0..na).map(|i| a[(i, i)].max(1e-12 * max_diag).max(f64::MIN_POSITIVE)).collect();
        if lambda < 0.0 {
            lambda = 1e-3;
        }

        let mut accepted = false;
        let mut done = false;
        for _ in 0..64 {
            let mut lhs = a.clone();
            for i in 0..na {
                lhs[(i, i)] += lambda * diag[i];
            }
            let Some(chol) = lhs.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let mut p_new = p.clone();
            for (i, &c) in active.iter().enumerate() {
                p_new[prob.free[c]] += delta[i];
            }
            prob.clamp(&mut p_new);
            let step = DVector::from_iterator(na, active.iter().map(|&c| p_new[prob.free[c]] - p[prob.free[c]]));
            let predicted = -(2.0 * g.dot(&step) + (&a * &step).dot(&step));
            let trial = prob.residuals(&p_new);
            let new_cost = trial.as_ref().map_or(f64::INFINITY, |t| t.norm_squared());
            let actual = cost - new_cost;
            if let (Some(t), true) = (trial, predicted > 0.0 && actual > 0.0) {
                let rho = actual / predicted;
                lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                let pnorm = active.iter().map(|&c| p[prob.free[c]].powi(2)).sum::<f64>().sqrt();
                let small_step = step.norm() <= opts.xtol * (pnorm + opts.xtol);
                let small_gain = actual <= opts.ftol * cost && predicted <= opts.ftol * cost;
                p = p_new;
                r = t;
                cost = new_cost;
                accepted = true;
                if small_step || small_gain {
                    outcome = Ok(());
                    done = true;
                }
                break;
            }
            let pnorm = active.iter().map(|&c| p[prob.free[c]].powi(2)).sum::<f64>().sqrt();
            if step.norm() <= opts.xtol * (pnorm + opts.xtol) * 1e-3 {
                // even tiny steps cannot reduce the cost: at a rounding floor
                break;
            }
            lambda *= nu;
            nu *= 2.0;
        }
        if done {
            break;
        }
        if !accepted {
            outcome = if cosine < 1e-4 {
                Ok(())
            } else {
                Err(format!("no further reduction possible (gradient cosine {cosine:.3e})"))
            };
            break;
        }
    }

    let n = data.len();
    let jac = prob.jacobian(&p);
    let a = jac.tr_mul(&jac);
    let dof = (n - k) as f64;
    let chi2_red = cost / dof;
    let mut covariance = vec![vec![0.0; m]; m];
    let inverse = scaled_inverse(&a);
    let identifiable = inverse.is_some();
    if let Some(inv) = inverse {
        for (i, &pi) in prob.free.iter().enumerate() {
            for (j, &pj) in prob.free.iter().enumerate() {
                covariance[pi][pj] = inv[(i, j)] * chi2_red;
            }
        }
    }
    // n (1e-10 rms)^2: noiseless ties resolve towards fewer parameters
    let floor = 1e-20 * data_scale;
    let sign = model.canonicalize(&mut p);
    for (i, row) in covariance.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c *= sign[i] * sign[j];
        }
    }
    let result = FitResult {
        model: model.kind(),
        param_names: model.param_names(),
        params: p,
        free: (0..m).map(|i| !fixed[i]).collect(),
        covariance,
        rss: cost,
        residual_norm: cost.sqrt(),
        n_points: n,
        aic: aic(cost.max(floor), n, k),
        converged: outcome.is_ok() && identifiable,
        iterations,
    };
    match (outcome, identifiable) {
        (Ok(()), true) => Ok(result),
        (Ok(()), false) => Err(Error::NonConvergence {
            reason: "singular normal matrix; parameters are not identifiable from the data".into(),
            best: Box::new(result),
        }),
        (Err(reason), _) => Err(Error::NonConvergence { reason, best: Box::new(result) }),
    }
}

/// Inverse of a symmetric positive semidefinite matrix after unit-diagonal
/// scaling; `None` when it is numerically singular.
fn scaled_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = a.nrows();
    if k == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    let d: Vec<f64> = (0..k).map(|i| a[(i, i)]).collect();
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let s = DMatrix::from_fn(k, k, |i, j| a[(i, j)] / (d[i] * d[j]).sqrt());
    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(min > 1e-13 * max) {
        return None;
    }
    let inv = s.cholesky()?.inverse();
    Some(DMatrix::from_fn(k, k, |i, j| inv[(i, j)] / (d[i] * d[j]).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::ModelKind;
    use crate::lineshape::LineShapeKind;
    use approx::assert_relative_eq;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn recovers_glp_from_perturbed_start() {
        let model = ModelKind::shape(LineShapeKind::GaussLorentzProduct);
        let truth = [1000.0, 226_139.87, 2.0, 1.8];
        let x = grid(226_130.0, 226_150.0, 201);
        let y: Vec<f64> = x.iter().map(|&v| model.eval(v, &truth)).collect();
        let data = FitData::unweighted(x, y).unwrap();
        let init = [1200.0, 226_139.87 + 0.36, 2.4, 1.44];
        let fit = nls_fit(&model, &data, &init, &FitOptions::default()).unwrap();
        for (a, b) in fit.params.iter().zip(truth) {
            assert_relative_eq!(*a, b, max_relative = 1e-9);
        }
        assert!(fit.converged);
    }

    #[test]
    fn linear_model_is_one_step() {
        let model = ModelKind::Polynomial { degree: 1 };
        let x = grid(-5.0, 5.0, 11);
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v + if (*v as i64) % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let data = FitData::unweighted(x.clone(), y.clone()).unwrap();
        let fit = nls_fit(&model, &data, &[0.0, 0.0], &FitOptions::default()).unwrap();
        // closed-form OLS
        let n = x.len() as f64;
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icpt = (sy - slope * sx) / n;
        assert_relative_eq!(fit.params[1], slope, epsilon = 1e-10);
        assert_relative_eq!(fit.params[0], icpt, epsilon = 1e-10);
        // covariance is symmetric and positive on the diagonal
        assert_relative_eq!(fit.covariance[0][1], fit.covariance[1][0], epsilon = 1e-15);
        assert!(fit.covariance[0][0] > 0.0 && fit.covariance[1][1] > 0.0);
    }

    #[test]
    fn flat_data_does_not_produce_a_fit() {
        let model = ModelKind::shape(LineShapeKind::GaussLorentzProduct);
        let x = grid(0.0, 10.0, 50);
        let y = vec![5.0; 50];
        let data = FitData::unweighted(x, y).unwrap();
        let err = nls_fit(&model, &data, &[0.0, 5.0, 1.0, 1.0], &FitOptions::default()).unwrap_err();
        assert!(err.is_non_convergence(), "{err:?}");
    }

    #[test]
    fn bounds_and_fixed_are_respected() {
        let model = ModelKind::shape(LineShapeKind::SingleExp);
        let x = grid(0.0, 10.0, 30);
        let y: Vec<f64> = x.iter().map(|t| 4.0 * (-t / 2.0f64).exp()).collect();
        let data = FitData::unweighted(x, y).unwrap();
        let opts = FitOptions::default().with_bounds(vec![(0.0, 3.0), (0.1, 100.0)]);
        let fit = nls_fit(&model, &data, &[1.0, 1.0], &opts).unwrap();
        assert!(fit.params[0] <= 3.0);
        let opts = FitOptions::default().with_fixed(vec![false, true]);
        let fit = nls_fit(&model, &data, &[1.0, 2.0], &opts).unwrap();
        assert_relative_eq!(fit.params[0], 4.0, max_relative = 1e-9);
        assert_eq!(fit.params[1], 2.0);
        assert_eq!(fit.covariance[1][1], 0.0);
        assert_eq!(fit.n_free(), 1);
    }

    #[test]
    fn too_few_points() {
        let model = ModelKind::Polynomial { degree: 2 };
        let data = FitData::unweighted(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 5.0]).unwrap();
        assert!(matches!(nls_fit(&model, &data, &[0.0; 3], &FitOptions::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn iteration_cap_reports_best() {
        let model = ModelKind::shape(LineShapeKind::GaussLorentzProduct);
        let x = grid(-10.0, 10.0, 101);
        let y: Vec<f64> = x.iter().map(|&v| model.eval(v, &[10.0, 0.3, 2.0, 3.0])).collect();
        let data = FitData::unweighted(x, y).unwrap();
        let opts = FitOptions { max_iterations: 1, ..FitOptions::default() };
        match nls_fit(&model, &data, &[5.0, 1.0, 3.0, 2.0], &opts) {
            Err(Error::NonConvergence { best, .. }) => assert_eq!(best.iterations, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let model = ModelKind::shape(LineShapeKind::Voigt);
        let x = grid(-10.0, 10.0, 101);
        let y: Vec<f64> = x.iter().map(|&v| model.eval(v, &[10.0, 0.3, 1.0, 0.8]) + 0.01 * v.sin()).collect();
        let data = FitData::unweighted(x, y).unwrap();
        let a = nls_fit(&model, &data, &[8.0, 0.0, 1.2, 1.0], &FitOptions::default()).unwrap();
        let b = nls_fit(&model, &data, &[8.0, 0.0, 1.2, 1.0], &FitOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
