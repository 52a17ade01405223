//! Local constant Fréchet regression with circular predictors:
//! `m̂_{h,0}(x) = argmin_y Σ_i L((1 − X_i'x)/h²) d²(Y_i, y)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{chord_term, Angle, CircularSample};
use crate::error::{check_bandwidth, Error, Result};
use crate::kernel::DirectionalKernel;
use crate::metric::{FrechetEstimate, MetricSpace, ResponsePoint};
use crate::model::{RegressionModel, ResponseNoise};

/// Observations `(X_i, Y_i)`, `i = 1..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    predictors: CircularSample,
    responses: Vec<ResponsePoint>,
}

impl PairedSample {
    pub fn new(predictors: CircularSample, responses: Vec<ResponsePoint>) -> Result<Self> {
        if predictors.is_empty() {
            return Err(Error::EmptySample);
        }
        if predictors.len() != responses.len() {
            return Err(Error::Domain(format!(
                "{} predictors but {} responses",
                predictors.len(),
                responses.len()
            )));
        }
        Ok(Self { predictors, responses })
    }

    pub fn predictors(&self) -> &CircularSample {
        &self.predictors
    }

    pub fn responses(&self) -> &[ResponsePoint] {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Checks every response against `space`.
    pub fn check_space(&self, space: &MetricSpace) -> Result<()> {
        self.responses.iter().try_for_each(|y| space.check_point(y))
    }
}

/// Kernel weights `L((1 − X_i'x)/h²)`.
pub fn kernel_weights(predictors: &CircularSample, kernel: &DirectionalKernel, h: f64, x: Angle) -> Vec<f64> {
    let xr = x.radians();
    predictors
        .angles()
        .iter()
        .map(|a| kernel.value(chord_term(a.radians() - xr, h)))
        .collect()
}

fn window_weights(
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
    skip: Option<usize>,
) -> Result<(Vec<f64>, f64)> {
    check_bandwidth(h)?;
    let mut w = kernel_weights(&sample.predictors, kernel, h, x);
    if let Some(i) = skip {
        w[i] = 0.0;
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyWindow { x: x.radians() });
    }
    Ok((w, total))
}

/// `M̂_{h,0}(x, y) = Σ L_i d²(Y_i, y) / Σ L_i`.
pub fn lc_objective(
    space: &MetricSpace,
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
    y: &ResponsePoint,
) -> Result<f64> {
    space.check_point(y)?;
    sample.check_space(space)?;
    let (w, total) = window_weights(sample, kernel, h, x, None)?;
    Ok(space.weighted_objective(&sample.responses, &w, y) / total)
}

/// `m̂_{h,0}(x)`. The reported objective is normalised by `Σ L_i`.
pub fn lc_estimate(
    space: &MetricSpace,
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
) -> Result<FrechetEstimate> {
    lc_estimate_excluding(space, sample, kernel, h, x, None)
}

/// As [`lc_estimate`], with observation `skip` removed from the fit.
pub fn lc_estimate_excluding(
    space: &MetricSpace,
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
    skip: Option<usize>,
) -> Result<FrechetEstimate> {
    let (w, total) = window_weights(sample, kernel, h, x, skip)?;
    let mut est = space.weighted_frechet_mean(&sample.responses, &w)?;
    est.objective /= total;
    est.runner_up_gap = est.runner_up_gap.map(|g| g / total);
    Ok(est)
}

/// A local constant fit bound to one sample, kernel and bandwidth.
#[derive(Debug, Clone)]
pub struct LocalConstant<'a> {
    pub space: MetricSpace,
    pub sample: &'a PairedSample,
    pub kernel: &'a DirectionalKernel,
    pub h: f64,
}

impl<'a> LocalConstant<'a> {
    pub fn new(space: MetricSpace, sample: &'a PairedSample, kernel: &'a DirectionalKernel, h: f64) -> Result<Self> {
        check_bandwidth(h)?;
        sample.check_space(&space)?;
        Ok(Self { space, sample, kernel, h })
    }

    pub fn estimate(&self, x: Angle) -> Result<FrechetEstimate> {
        lc_estimate(&self.space, self.sample, self.kernel, self.h, x)
    }

    /// Estimates at every query, in query order.
    pub fn estimate_all(&self, queries: &[Angle]) -> Vec<Result<FrechetEstimate>> {
        queries.par_iter().map(|x| self.estimate(*x)).collect()
    }
}

/// `M̃_{h,0}(x, y) = E[L M⊕(X, y)] / E[L]`, by quadrature against the predictor density.
pub fn lc_population_objective(
    model: &RegressionModel,
    kernel: &DirectionalKernel,
    h: f64,
    x: Angle,
    y: &ResponsePoint,
) -> Result<f64> {
    check_bandwidth(h)?;
    model.conditional_objective(x.radians(), y)?;
    let xr = x.radians();
    let f = &model.predictor;
    let num = kernel.circle_integral(h, 1, |t| {
        f.pdf(xr + t) * model.conditional_objective(xr + t, y).unwrap_or(f64::NAN)
    })?;
    let den = kernel.circle_integral(h, 1, |t| f.pdf(xr + t))?;
    if !(den > 0.0) {
        return Err(Error::EmptyWindow { x: xr });
    }
    Ok(num / den)
}

/// `m̃_{h,0}(x)` for scalar models with additive noise, where `M̃_{h,0}` is a
/// quadratic in `y` whose vertex is `E[L m(X)] / E[L]`.
pub fn lc_population_estimate(model: &RegressionModel, kernel: &DirectionalKernel, h: f64, x: Angle) -> Result<f64> {
    check_bandwidth(h)?;
    if !matches!(model.noise, ResponseNoise::Gaussian { .. }) {
        return Err(Error::UnsupportedModel("population estimate needs scalar responses".into()));
    }
    let xr = x.radians();
    let f = &model.predictor;
    let num = kernel.circle_integral(h, 1, |t| f.pdf(xr + t) * model.truth.eval(xr + t))?;
    let den = kernel.circle_integral(h, 1, |t| f.pdf(xr + t))?;
    if !(den > 0.0) {
        return Err(Error::EmptyWindow { x: xr });
    }
    Ok(num / den)
}
