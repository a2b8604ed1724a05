//! Nonlinear least squares, model selection and the derived-quantity
//! extractors built on top of them.

mod aic;
mod extract;
mod g2;
pub mod guess;
mod lm;
mod stark;

use serde::{Deserialize, Serialize};

pub use aic::{aic, aic_select, AIC_THRESHOLD};
pub use extract::{
    fit_cavity, fit_dark_lifetime, fit_decay, fit_holeburning, fit_peak, peak_area_skewed_voigt, peak_summary,
    rise_time_10_90, second_peak_areas, CavityFit, DarkLifetimeFit, HoleBurningFit, PeakArea, PeakSummary,
};
pub use g2::{correlate, g2_correct, g2_normalization, CoincidenceHistogram, G2Correction};
pub use lm::{nls_fit, FitOptions};
pub use stark::{fit_stark_points, fit_stark_series, StarkFit, StarkPoint};

use crate::error::{Error, Result};
use crate::lineshape::LineShapeKind;

/// A model `y = f(x; p)` that can be fitted.
pub trait FitModel: Sync {
    fn n_params(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    fn eval(&self, x: f64, p: &[f64]) -> f64;
    /// Typical magnitude of each parameter, used for finite-difference steps.
    fn step_scales(&self, p: &[f64]) -> Vec<f64> {
        p.iter().map(|v| v.abs().max(1e-3)).collect()
    }
    fn kind(&self) -> ModelKind;
    /// Map `p` onto a canonical representative of curves with several
    /// equivalent parameter sets. Returns the sign each parameter picked up.
    fn canonicalize(&self, p: &mut [f64]) -> Vec<f64> {
        vec![1.0; p.len()]
    }
}

/// Serializable tag for every fittable model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelKind {
    /// A lineshape, optionally plus a constant baseline as the last parameter.
    Shape { kind: LineShapeKind, baseline: bool },
    /// `c0 + c1 x + ... + c_d x^d`.
    Polynomial { degree: usize },
    /// A model defined by the caller.
    Custom,
}

impl ModelKind {
    pub fn shape(kind: LineShapeKind) -> Self {
        ModelKind::Shape { kind, baseline: false }
    }

    pub fn with_baseline(kind: LineShapeKind) -> Self {
        ModelKind::Shape { kind, baseline: true }
    }

    pub fn label(&self) -> String {
        match self {
            ModelKind::Shape { kind, baseline: false } => kind.name().to_string(),
            ModelKind::Shape { kind, baseline: true } => format!("{}+baseline", kind.name()),
            ModelKind::Polynomial { degree } => format!("polynomial{degree}"),
            ModelKind::Custom => "custom".to_string(),
        }
    }
}

impl FitModel for ModelKind {
    fn n_params(&self) -> usize {
        match *self {
            ModelKind::Shape { kind, baseline } => kind.n_params() + usize::from(baseline),
            ModelKind::Polynomial { degree } => degree + 1,
            ModelKind::Custom => 0,
        }
    }

    fn param_names(&self) -> Vec<String> {
        match *self {
            ModelKind::Shape { kind, baseline } => {
                let mut v: Vec<String> = kind.param_names().iter().map(|s| s.to_string()).collect();
                if baseline {
                    v.push("baseline".into());
                }
                v
            }
            ModelKind::Polynomial { degree } => (0..=degree).map(|i| format!("c{i}")).collect(),
            ModelKind::Custom => Vec::new(),
        }
    }

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        match *self {
            ModelKind::Shape { kind, baseline } => {
                let n = kind.n_params();
                let b = if baseline { p[n] } else { 0.0 };
                kind.eval(x, &p[..n]) + b
            }
            ModelKind::Polynomial { .. } => p.iter().rev().fold(0.0, |acc, c| acc * x + c),
            ModelKind::Custom => f64::NAN,
        }
    }

    fn step_scales(&self, p: &[f64]) -> Vec<f64> {
        let mut s: Vec<f64> = p.iter().map(|v| v.abs().max(1e-3)).collect();
        if let ModelKind::Shape { kind, .. } = *self {
            // location parameters step relative to the local width
            let loc = |s: &mut Vec<f64>, i: usize, w: f64| s[i] = w.abs().max(1e-6);
            match kind {
                LineShapeKind::GaussLorentzProduct | LineShapeKind::Voigt | LineShapeKind::SkewedVoigt => {
                    let w = p[2].abs().min(p[3].abs()).max(1e-6);
                    loc(&mut s, 1, w);
                }
                LineShapeKind::Sigmoid => loc(&mut s, 1, p[2]),
                LineShapeKind::CavityComposite => {
                    loc(&mut s, 6, p[7]);
                    s[2] = 1.0;
                }
                LineShapeKind::DoubleDecay => {
                    loc(&mut s, 1, p[2]);
                    loc(&mut s, 4, p[5]);
                    loc(&mut s, 7, p[9]);
                }
                _ => {}
            }
        }
        s
    }

    fn kind(&self) -> ModelKind {
        *self
    }

    fn canonicalize(&self, p: &mut [f64]) -> Vec<f64> {
        let mut sign = vec![1.0; p.len()];
        if let ModelKind::Shape { kind: LineShapeKind::GaussLorentzProduct, .. } = *self {
            // both widths enter squared
            for i in [2, 3] {
                if p[i] < 0.0 {
                    p[i] = -p[i];
                    sign[i] = -1.0;
                }
            }
        }
        if let ModelKind::Shape { kind: LineShapeKind::CavityComposite, .. } = *self {
            // A sin(-f d + phi) = A sin(f d + pi - phi) and -A sin(x) = A sin(x + pi)
            if p[1] < 0.0 {
                p[1] = -p[1];
                p[2] = std::f64::consts::PI - p[2];
                sign[1] = -1.0;
                sign[2] = -1.0;
            }
            if p[0] < 0.0 {
                p[0] = -p[0];
                p[2] += std::f64::consts::PI;
                sign[0] = -1.0;
            }
            let tau = std::f64::consts::TAU;
            p[2] -= tau * (p[2] / tau).round();
        }
        sign
    }
}

/// Observations with per-point standard deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct FitData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `y` are counts; the fit reweights with model variances (see [`nls_fit`]).
    pub poisson: bool,
}

impl FitData {
    pub fn new(x: Vec<f64>, y: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != sigma.len() {
            return Err(Error::invalid("x, y and sigma must have equal lengths"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite data value"));
        }
        if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("sigma must be positive and finite"));
        }
        Ok(FitData { x, y, sigma, poisson: false })
    }

    /// Unit weights.
    pub fn unweighted(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new(x, y, vec![1.0; n])
    }

    /// Counts with shot noise. The starting weights are `sqrt(counts)` floored
    /// at 1; fits then replace them with the square root of the fitted model.
    pub fn poisson(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let sigma = y.iter().map(|c| c.max(0.0).sqrt().max(1.0)).collect();
        Ok(FitData { poisson: true, ..Self::new(x, y, sigma)? })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Outcome of a least-squares fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: ModelKind,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// Which parameters were varied.
    pub free: Vec<bool>,
    /// Row-major covariance; zero rows and columns for fixed parameters.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    /// `sqrt(rss)`.
    pub residual_norm: f64,
    pub n_points: usize,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// One named parameter with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    pub error: f64,
    pub free: bool,
}

impl FitResult {
    /// Number of varied parameters.
    pub fn n_free(&self) -> usize {
        self.free.iter().filter(|f| **f).count()
    }

    pub fn reduced_chi2(&self) -> f64 {
        let dof = self.n_points.saturating_sub(self.n_free());
        if dof == 0 {
            f64::NAN
        } else {
            self.rss / dof as f64
        }
    }

    /// 1-sigma errors from the covariance diagonal.
    pub fn errors(&self) -> Vec<f64> {
        (0..self.params.len()).map(|i| self.covariance[i][i].max(0.0).sqrt()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.params[i])
    }

    pub fn error_of(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.covariance[i][i].max(0.0).sqrt())
    }

    pub fn estimates(&self) -> Vec<ParamEstimate> {
        let err = self.errors();
        self.param_names
            .iter()
            .enumerate()
            .map(|(i, n)| ParamEstimate { name: n.clone(), value: self.params[i], error: err[i], free: self.free[i] })
            .collect()
    }

    /// JSON object with the model tag, named parameters and 1-sigma errors.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model.label(),
            "parameters": self.estimates(),
            "residual_norm": self.residual_norm,
            "reduced_chi2": finite_or_null(self.reduced_chi2()),
            "n_points": self.n_points,
            "aic": finite_or_null(self.aic),
            "converged": self.converged,
            "iterations": self.iterations,
        })
    }

    /// Evaluate the fitted model.
    pub fn predict(&self, x: f64) -> Option<f64> {
        match self.model {
            ModelKind::Custom => None,
            m => Some(m.eval(x, &self.params)),
        }
    }
}

pub(crate) fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}
