//! Local linear Fréchet regression with circular predictors.
//!
//! With `t_i = Φ_x^{−1}(X_i)` the signed angle of `X_i` from `x` and
//! `L_i = L((1 − X_i'x)/h²)`, the local moments are
//! `μ̂_j = n^{−1} Σ L_i t_i^j`, `σ̂² = μ̂₀μ̂₂ − μ̂₁²`, and the effective weights
//! `Ŵ_i = L_i (μ̂₂ − μ̂₁ t_i) / σ̂²` define `M̂_{h,1}(x, y) = n^{−1} Σ Ŵ_i d²(Y_i, y)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{Angle, CircularSample};
use crate::error::{check_bandwidth, Error, Result};
use crate::frechet_lc::{kernel_weights, PairedSample};
use crate::kernel::DirectionalKernel;
use crate::metric::{FrechetEstimate, MetricSpace, ResponsePoint};
use crate::model::{DensityModel, RegressionModel, ResponseNoise};

/// Relative threshold below which `σ̂²` counts as a singular design.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMoments {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma2: f64,
    pub h: f64,
    pub x: Angle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveWeights {
    /// `Ŵ_h(X_i, x)`; may be negative. Excluded observations carry weight 0.
    pub weights: Vec<f64>,
    pub moments: LocalMoments,
}

/// Signed angles `Φ_x^{−1}(X_i)` in `[−π, π)`.
pub fn signed_offsets(predictors: &CircularSample, x: Angle) -> Vec<f64> {
    predictors.angles().iter().map(|a| a.offset_from(x).radians()).collect()
}

fn moments_from(l: &[f64], t: &[f64], count: usize, h: f64, x: Angle) -> Result<LocalMoments> {
    let n = count as f64;
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (li, ti) in l.iter().zip(t) {
        s0 += li;
        s1 += li * ti;
        s2 += li * ti * ti;
    }
    let (mu0, mu1, mu2) = (s0 / n, s1 / n, s2 / n);
    if !(mu0 > 0.0) {
        return Err(Error::EmptyWindow { x: x.radians() });
    }
    let sigma2 = mu0 * mu2 - mu1 * mu1;
    if !(sigma2 > SINGULAR_TOLERANCE * mu0 * mu2) {
        return Err(Error::SingularDesign { x: x.radians(), sigma2 });
    }
    Ok(LocalMoments { mu0, mu1, mu2, sigma2, h, x })
}

struct Design {
    count: usize,
    l: Vec<f64>,
    t: Vec<f64>,
    moments: LocalMoments,
}

fn design(predictors: &CircularSample, kernel: &DirectionalKernel, h: f64, x: Angle, skip: Option<usize>) -> Result<Design> {
    check_bandwidth(h)?;
    if predictors.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut l = kernel_weights(predictors, kernel, h, x);
    let mut count = predictors.len();
    if let Some(i) = skip {
        l[i] = 0.0;
        count -= 1;
    }
    if count == 0 {
        return Err(Error::EmptySample);
    }
    let t = signed_offsets(predictors, x);
    let moments = moments_from(&l, &t, count, h, x)?;
    Ok(Design { count, l, t, moments })
}

impl Design {
    fn weights(&self) -> Vec<f64> {
        let m = &self.moments;
        self.l
            .iter()
            .zip(&self.t)
            .map(|(li, ti)| if *li == 0.0 { 0.0 } else { li * (m.mu2 - m.mu1 * ti) / m.sigma2 })
            .collect()
    }
}

/// `μ̂_{h,0..2}(x)` and `σ̂²_h(x)`.
pub fn local_moments(predictors: &CircularSample, kernel: &DirectionalKernel, h: f64, x: Angle) -> Result<LocalMoments> {
    Ok(design(predictors, kernel, h, x, None)?.moments)
}

/// `Ŵ_h(X_i, x)` for every observation.
pub fn effective_weights(
    predictors: &CircularSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
) -> Result<EffectiveWeights> {
    let d = design(predictors, kernel, h, x, None)?;
    Ok(EffectiveWeights {
        weights: d.weights(),
        moments: d.moments,
    })
}

/// `M̂_{h,1}(x, y) = n^{−1} Σ Ŵ_i d²(Y_i, y)`.
pub fn ll_objective(
    space: &MetricSpace,
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
    y: &ResponsePoint,
) -> Result<f64> {
    space.check_point(y)?;
    sample.check_space(space)?;
    let w = effective_weights(sample.predictors(), kernel, h, x)?;
    Ok(space.weighted_objective(sample.responses(), &w.weights, y) / sample.len() as f64)
}

/// `M̂_{h,1}` through `(ν̂₀ μ̂₂ − ν̂₁ μ̂₁) / σ̂²` with
/// `ν̂_j = n^{−1} Σ L_i t_i^j d²(Y_i, y)`.
pub fn ll_objective_moment_form(
    space: &MetricSpace,
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
    y: &ResponsePoint,
) -> Result<f64> {
    space.check_point(y)?;
    sample.check_space(space)?;
    let d = design(sample.predictors(), kernel, h, x, None)?;
    let n = sample.len() as f64;
    let (mut nu0, mut nu1) = (0.0, 0.0);
    for ((li, ti), yi) in d.l.iter().zip(&d.t).zip(sample.responses()) {
        if *li == 0.0 {
            continue;
        }
        let dd = space.squared_distance_unchecked(yi, y);
        nu0 += li * dd;
        nu1 += li * ti * dd;
    }
    let m = d.moments;
    Ok((nu0 / n * m.mu2 - nu1 / n * m.mu1) / m.sigma2)
}

/// `m̂_{h,1}(x)`; the reported objective is `M̂_{h,1}` at the minimiser.
pub fn ll_estimate(
    space: &MetricSpace,
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
) -> Result<FrechetEstimate> {
    ll_estimate_excluding(space, sample, kernel, h, x, None)
}

/// As [`ll_estimate`], with observation `skip` removed from the fit.
pub fn ll_estimate_excluding(
    space: &MetricSpace,
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
    skip: Option<usize>,
) -> Result<FrechetEstimate> {
    let d = design(sample.predictors(), kernel, h, x, skip)?;
    let n = d.count as f64;
    let w: Vec<f64> = d.weights().into_iter().map(|v| v / n).collect();
    space.weighted_frechet_mean(sample.responses(), &w)
}

/// Intercept `β̂₀` of the kernel-weighted least squares line
/// `Y ≈ β₀ + β₁ Φ_x^{−1}(X)`, solved in centred form.
pub fn ll_scalar_closed_form(sample: &PairedSample, kernel: &DirectionalKernel, h: f64, x: Angle) -> Result<f64> {
    check_bandwidth(h)?;
    let ys: Vec<f64> = sample
        .responses()
        .iter()
        .map(|y| y.as_scalar().ok_or_else(|| Error::TypeMismatch("closed form needs scalar responses".into())))
        .collect::<Result<_>>()?;
    let l = kernel_weights(sample.predictors(), kernel, h, x);
    let t = signed_offsets(sample.predictors(), x);
    let s0: f64 = l.iter().sum();
    if !(s0 > 0.0) {
        return Err(Error::EmptyWindow { x: x.radians() });
    }
    let tbar = l.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>() / s0;
    let ybar = l.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>() / s0;
    let (mut sxx, mut sxy, mut s2) = (0.0, 0.0, 0.0);
    for ((li, ti), yi) in l.iter().zip(&t).zip(&ys) {
        sxx += li * (ti - tbar) * (ti - tbar);
        sxy += li * (ti - tbar) * (yi - ybar);
        s2 += li * ti * ti;
    }
    if !(sxx * s0 > SINGULAR_TOLERANCE * s0 * s2) {
        let n = sample.len() as f64;
        return Err(Error::SingularDesign {
            x: x.radians(),
            sigma2: sxx * s0 / (n * n),
        });
    }
    Ok(ybar - sxy / sxx * tbar)
}

/// A local linear fit bound to one sample, kernel and bandwidth.
#[derive(Debug, Clone)]
pub struct LocalLinear<'a> {
    pub space: MetricSpace,
    pub sample: &'a PairedSample,
    pub kernel: &'a DirectionalKernel,
    pub h: f64,
}

impl<'a> LocalLinear<'a> {
    pub fn new(space: MetricSpace, sample: &'a PairedSample, kernel: &'a DirectionalKernel, h: f64) -> Result<Self> {
        check_bandwidth(h)?;
        sample.check_space(&space)?;
        Ok(Self { space, sample, kernel, h })
    }

    pub fn estimate(&self, x: Angle) -> Result<FrechetEstimate> {
        ll_estimate(&self.space, self.sample, self.kernel, self.h, x)
    }

    pub fn estimate_all(&self, queries: &[Angle]) -> Vec<Result<FrechetEstimate>> {
        queries.par_iter().map(|x| self.estimate(*x)).collect()
    }
}

/// `E[L t^j g(x + t)]`, integrated in `v = t/h` and rescaled by `h^j`.
fn population_moment<G: Fn(f64) -> f64>(kernel: &DirectionalKernel, h: f64, x: f64, j: i32, g: G) -> Result<f64> {
    let inner = kernel.circle_integral(h, 1, |t| (t / h).powi(j) * g(x + t))?;
    Ok(h.powi(j) * inner)
}

/// Population moments `μ̃_{h,j}(x) = E[L (Φ_x^{−1}(X))^j]` and `σ̃²_h(x)`.
pub fn population_local_moments(
    density: &DensityModel,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
) -> Result<LocalMoments> {
    check_bandwidth(h)?;
    let xr = x.radians();
    let f = |t: f64| density.pdf(t);
    let mu0 = population_moment(kernel, h, xr, 0, f)?;
    let mu1 = population_moment(kernel, h, xr, 1, f)?;
    let mu2 = population_moment(kernel, h, xr, 2, f)?;
    let sigma2 = mu0 * mu2 - mu1 * mu1;
    if !(sigma2 > SINGULAR_TOLERANCE * mu0 * mu2) {
        return Err(Error::SingularDesign { x: xr, sigma2 });
    }
    Ok(LocalMoments { mu0, mu1, mu2, sigma2, h, x })
}

/// `M̃_{h,1}(x, y) = E[W̃_h(X, x) M⊕(X, y)]`.
pub fn ll_population_objective(
    model: &RegressionModel,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
    y: &ResponsePoint,
) -> Result<f64> {
    model.conditional_objective(x.radians(), y)?;
    let m = population_local_moments(&model.predictor, kernel, h, x)?;
    let xr = x.radians();
    let g = |t: f64| model.predictor.pdf(t) * model.conditional_objective(t, y).unwrap_or(f64::NAN);
    let nu0 = population_moment(kernel, h, xr, 0, g)?;
    let nu1 = population_moment(kernel, h, xr, 1, g)?;
    Ok((nu0 * m.mu2 - nu1 * m.mu1) / m.sigma2)
}

/// `m̃_{h,1}(x) = E[W̃_h(X, x) m(X)]` for scalar models with additive noise.
pub fn ll_population_estimate(model: &RegressionModel, kernel: &DirectionalKernel, h: f64, x: Angle) -> Result<f64> {
    if !matches!(model.noise, ResponseNoise::Gaussian { .. }) {
        return Err(Error::UnsupportedModel("population estimate needs scalar responses".into()));
    }
    let m = population_local_moments(&model.predictor, kernel, h, x)?;
    let xr = x.radians();
    let g = |t: f64| model.predictor.pdf(t) * model.truth.eval(t);
    let e0 = population_moment(kernel, h, xr, 0, g)?;
    let e1 = population_moment(kernel, h, xr, 1, g)?;
    Ok((m.mu2 * e0 - m.mu1 * e1) / m.sigma2)
}
