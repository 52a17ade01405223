//! Bandwidth selection: AMISE plug-in for the density estimate and
//! leave-one-out cross-validation for the density and both regression estimators.

use std::f64::consts::TAU;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::CircularSample;
use crate::error::{Error, Result};
use crate::frechet_lc::{lc_estimate_excluding, PairedSample};
use crate::frechet_ll::ll_estimate_excluding;
use crate::kde::{h_amise, periodic_trapezoid, KernelDensity, ISE_GRID};
use crate::kernel::DirectionalKernel;
use crate::metric::MetricSpace;
use crate::numeric::CompensatedSum;

/// Grid resolution for the pilot curvature estimate.
pub const PILOT_GRID: usize = 512;

/// Trigonometric moments used by the uniformity guard.
pub const UNIFORMITY_HARMONICS: usize = 4;

/// Samples whose uniformity p-value exceeds this level have no usable curvature.
pub const UNIFORMITY_LEVEL: f64 = 1e-3;

/// Plug-in results above this bandwidth are flagged as unreliable: the
/// kernel window then spans most of the circle.
pub const LARGE_BANDWIDTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid {
    values: Vec<f64>,
    pub scale: GridScale,
}

impl BandwidthGrid {
    pub fn new(values: Vec<f64>, scale: GridScale) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("bandwidth grid is empty".into()));
        }
        if values.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidConfig("bandwidths must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("bandwidth grid must be strictly increasing".into()));
        }
        Ok(Self { values, scale })
    }

    pub fn log(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::spaced(lo, hi, count, GridScale::Log)
    }

    pub fn linear(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::spaced(lo, hi, count, GridScale::Linear)
    }

    fn spaced(lo: f64, hi: f64, count: usize, scale: GridScale) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidConfig("bandwidth grid needs at least one point".into()));
        }
        if count == 1 {
            return Self::new(vec![lo], scale);
        }
        let step = |i: usize| i as f64 / (count - 1) as f64;
        let values = match scale {
            GridScale::Log => {
                if !(lo > 0.0) {
                    return Err(Error::InvalidConfig("log grid needs a positive lower end".into()));
                }
                let (a, b) = (lo.ln(), hi.ln());
                (0..count).map(|i| (a + (b - a) * step(i)).exp()).collect()
            }
            GridScale::Linear => (0..count).map(|i| lo + (hi - lo) * step(i)).collect(),
        };
        Self::new(values, scale)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `"lo:hi:N"` (linear) or `"lo:hi:Nlog"` / `"lo:hi:Nlin"`.
impl FromStr for BandwidthGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse bandwidth grid {s:?}; expected lo:hi:N[log|lin]"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let text = parts[2].trim();
        let (count, scale) = if let Some(c) = text.strip_suffix("log") {
            (c, GridScale::Log)
        } else if let Some(c) = text.strip_suffix("lin") {
            (c, GridScale::Linear)
        } else {
            (text, GridScale::Linear)
        };
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        Self::spaced(lo, hi, count, scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PluginBandwidth {
    pub h: f64,
    /// Pilot roughness `∫ (f̂'')²`, the `S_f` estimate used for `h`.
    pub score: f64,
    pub pilot_h: f64,
    pub uniformity_p_value: f64,
    /// Set when `h` exceeds [`LARGE_BANDWIDTH`].
    pub large: bool,
}

/// AMISE plug-in bandwidth with `S_f` estimated from a pilot density estimate
/// by periodic second differences on a 512-point grid.
///
/// Fails with a degenerate-curvature error when the roughness is below
/// `1e-12` or the sample is consistent with the uniform law (see
/// [`uniformity_p_value`]): the pilot's roughness is then its own noise.
pub fn plugin_bandwidth(
    sample: &CircularSample,
    kernel: &DirectionalKernel,
    pilot_h: Option<f64>,
) -> Result<PluginBandwidth> {
    let n = sample.len();
    if n < 10 {
        return Err(Error::Domain(format!("plug-in bandwidth needs at least 10 observations, got {n}")));
    }
    let pilot_h = pilot_h.unwrap_or_else(|| (n as f64).powf(-0.2));
    let uniformity = uniformity_p_value(sample, UNIFORMITY_HARMONICS);
    let pilot = KernelDensity::new(kernel, sample, pilot_h)?;
    let f: Vec<f64> = pilot.evaluate_grid(PILOT_GRID).into_iter().map(|(_, v)| v).collect();
    let score = roughness(&f);
    if !(score >= 1e-12) || uniformity > UNIFORMITY_LEVEL {
        return Err(Error::DegenerateCurvature { score });
    }
    let h = h_amise(score, kernel, n)?;
    Ok(PluginBandwidth {
        h,
        score,
        pilot_h,
        uniformity_p_value: uniformity,
        large: h > LARGE_BANDWIDTH,
    })
}

/// p-value of `T = 2n Σ_{p=1}^{P} |φ̂_p|²`, where `φ̂_p` is the `p`-th
/// empirical trigonometric moment; `T ~ χ²_{2P}` under uniformity.
pub fn uniformity_p_value(sample: &CircularSample, harmonics: usize) -> f64 {
    let n = sample.len() as f64;
    let t: f64 = (1..=harmonics)
        .map(|p| {
            let (c, s) = sample.angles().iter().fold((0.0, 0.0), |(c, s), a| {
                let (sn, cs) = (p as f64 * a.radians()).sin_cos();
                (c + cs, s + sn)
            });
            2.0 * (c * c + s * s) / n
        })
        .sum();
    // χ²_{2P} survival function: e^{−t/2} Σ_{k<P} (t/2)^k / k!
    let half = 0.5 * t;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..harmonics {
        if k > 0 {
            term *= half / k as f64;
        }
        sum += term;
    }
    (-half).exp() * sum
}

/// `∫ (g'')²` for a periodic grid function, by second differences.
fn roughness(g: &[f64]) -> f64 {
    let m = g.len();
    let dx = TAU / m as f64;
    let sq: Vec<f64> = (0..m)
        .map(|k| {
            let d2 = (g[(k + 1) % m] - 2.0 * g[k] + g[(k + m - 1) % m]) / (dx * dx);
            d2 * d2
        })
        .collect();
    periodic_trapezoid(&sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[serde(rename = "lc")]
    LocalConstant,
    #[serde(rename = "ll")]
    LocalLinear,
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lc" => Ok(Estimator::LocalConstant),
            "ll" => Ok(Estimator::LocalLinear),
            other => Err(Error::InvalidConfig(format!("unknown regression estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub h: f64,
    pub cv: f64,
    /// Folds that fell back to the penalty.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    pub selected_h: f64,
    pub scores: Vec<CvScore>,
}

/// Whether an estimator error counts as a fold failure rather than a hard error.
fn is_fold_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::EmptyWindow { .. } | Error::SingularDesign { .. } | Error::DegenerateWeights(_)
    )
}

/// Default fold penalty: squared diameter bound if known, else the largest
/// observed squared distance between responses.
pub fn default_penalty(space: &MetricSpace, sample: &PairedSample) -> f64 {
    if let Some(d) = space.diameter_bound {
        return d * d;
    }
    let ys = sample.responses();
    (0..ys.len())
        .into_par_iter()
        .map(|i| {
            ys[i + 1..]
                .iter()
                .map(|y| space.squared_distance_unchecked(&ys[i], y))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn select(scores: Vec<CvScore>, n: usize) -> Result<CvSelection> {
    let best = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.failures < n)
        .min_by(|a, b| a.1.cv.total_cmp(&b.1.cv).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .ok_or(Error::NoValidBandwidth)?;
    Ok(CvSelection {
        selected_h: scores[best].h,
        scores,
    })
}

/// Leave-one-out CV for Fréchet regression:
/// `CV(h) = n^{−1} Σ_i d²(Y_i, m̂_h^{(−i)}(X_i))`.
pub fn cv_bandwidth_frechet(
    space: &MetricSpace,
    sample: &PairedSample,
    kernel: &DirectionalKernel,
    grid: &BandwidthGrid,
    estimator: Estimator,
    penalty: Option<f64>,
) -> Result<CvSelection> {
    let n = sample.len();
    if n < 20 {
        return Err(Error::Domain(format!("cross-validation needs at least 20 observations, got {n}")));
    }
    sample.check_space(space)?;
    let penalty = penalty.unwrap_or_else(|| default_penalty(space, sample));
    let xs = sample.predictors().angles();
    let ys = sample.responses();
    let pairs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..n).map(move |i| (g, i))).collect();
    let losses: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(g, i)| {
            let h = grid.values[g];
            let est = match estimator {
                Estimator::LocalConstant => lc_estimate_excluding(space, sample, kernel, h, xs[i], Some(i)),
                Estimator::LocalLinear => ll_estimate_excluding(space, sample, kernel, h, xs[i], Some(i)),
            };
            match est {
                Ok(e) => Ok(Some(space.squared_distance_unchecked(&ys[i], &e.minimizer))),
                Err(e) if is_fold_failure(&e) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let scores: Vec<CvScore> = grid
        .values
        .iter()
        .enumerate()
        .map(|(g, &h)| {
            let fold = &losses[g * n..(g + 1) * n];
            let failures = fold.iter().filter(|l| l.is_none()).count();
            let sum: CompensatedSum = fold.iter().map(|l| l.unwrap_or(penalty)).collect();
            CvScore {
                h,
                cv: sum.value() / n as f64,
                failures,
            }
        })
        .collect();
    select(scores, n)
}

/// Least-squares cross-validation for the density estimate:
/// `CV(h) = ∫ f̂² − (2/n) Σ_i f̂^{(−i)}(X_i)`.
pub fn cv_bandwidth_density(
    sample: &CircularSample,
    kernel: &DirectionalKernel,
    grid: &BandwidthGrid,
) -> Result<CvSelection> {
    let n = sample.len();
    if n < 20 {
        return Err(Error::Domain(format!("cross-validation needs at least 20 observations, got {n}")));
    }
    let scores: Vec<CvScore> = grid
        .values
        .par_iter()
        .map(|&h| {
            let est = KernelDensity::new(kernel, sample, h)?;
            let sq: Vec<f64> = est.evaluate_grid(ISE_GRID).into_iter().map(|(_, v)| v * v).collect();
            let self_weight = kernel.value(0.0) / (n as f64 * est.normalizer());
            let loo: CompensatedSum = sample
                .angles()
                .iter()
                .map(|a| (est.density_at(*a) - self_weight) * n as f64 / (n - 1) as f64)
                .collect();
            Ok(CvScore {
                h,
                cv: periodic_trapezoid(&sq) - 2.0 * loo.value() / n as f64,
                failures: 0,
            })
        })
        .collect::<Result<_>>()?;
    select(scores, n)
}
