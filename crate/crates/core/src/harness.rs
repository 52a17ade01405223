//! Monte Carlo rate experiments: draw replicate datasets at each sample
//! size, measure the estimation error and fit a log-log slope.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::Angle;
use crate::error::{Error, Result};
use crate::frechet_lc::lc_estimate;
use crate::frechet_ll::ll_estimate;
use crate::kde::{h_amise, integrated_squared_error, score_sf, KernelDensity};
use crate::kernel::DirectionalKernel;
use crate::model::{DensityModel, RegressionModel, ResponseNoise, TruthFunction};
use crate::numeric::{derive_seed, CompensatedSum};

/// Largest tolerated share of failed replicates at any sample size.
pub const MAX_FAILURE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Kde,
    Lc,
    Ll,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Fixed(f64),
    /// `h_AMISE` from the model's exact curvature score (density only).
    Amise,
    /// `h = c n^{−γ}`.
    PowerLaw { gamma: f64, c: f64 },
}

/// A regression law in configuration form; the predictor density uses the
/// textual model syntax of [`DensityModel::parse`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    pub predictor: String,
    #[serde(default = "TruthFunction::sine")]
    pub truth: TruthFunction,
    pub noise: ResponseNoise,
}

impl RegressionConfig {
    pub fn build(&self) -> Result<RegressionModel> {
        Ok(RegressionModel {
            predictor: DensityModel::parse(&self.predictor)?,
            truth: self.truth,
            noise: self.noise,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelConfig {
    Density(String),
    Regression(RegressionConfig),
}

fn default_kernel() -> String {
    "von_mises".into()
}

fn default_beta() -> f64 {
    2.0
}

/// The standard 16-angle query grid `−π + 2πk/16`.
pub fn default_query_angles() -> Vec<f64> {
    (0..16).map(|k| -PI + TAU * k as f64 / 16.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub estimator: EstimatorKind,
    pub model: ModelConfig,
    #[serde(default = "default_kernel")]
    pub kernel: String,
    pub n_list: Vec<usize>,
    pub h_rule: BandwidthRule,
    pub reps: usize,
    pub seed: u64,
    /// Query angles in radians for regression error; ignored for densities.
    #[serde(default = "default_query_angles")]
    pub query_angles: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta_oplus: f64,
    #[serde(default = "default_beta")]
    pub beta_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub h: f64,
    /// Mean error over successful replicates.
    pub error: f64,
    /// Standard error of that mean.
    pub stderr: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config_echo: ExperimentConfig,
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub theory_slope: Option<f64>,
    /// Only filled when timing is requested, so reports stay reproducible.
    pub wall_time_seconds: Option<f64>,
}

enum Prepared {
    Density(DensityModel),
    Regression(RegressionModel),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.prepare().map(|_| ())
    }

    fn prepare(&self) -> Result<(Prepared, DirectionalKernel)> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        if self.n_list[0] < 2 || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("n_list must be strictly increasing with every n >= 2".into());
        }
        if self.reps < 2 {
            return bad(format!("reps must be at least 2, got {}", self.reps));
        }
        if !(self.beta_oplus > 1.0) || !(self.beta_tilde > 1.0) {
            return bad("curvature exponents must exceed 1".into());
        }
        match self.h_rule {
            BandwidthRule::Fixed(h) if !(h > 0.0) || !h.is_finite() => {
                return bad(format!("fixed bandwidth must be positive, got {h}"))
            }
            BandwidthRule::PowerLaw { gamma, c } if !(gamma > 0.0 && gamma < 1.0) || !(c > 0.0) => {
                return bad(format!("power law needs 0 < gamma < 1 and c > 0, got gamma {gamma}, c {c}"))
            }
            _ => {}
        }
        let kernel: DirectionalKernel = self.kernel.parse()?;
        let prepared = match (&self.model, self.estimator) {
            (ModelConfig::Density(text), EstimatorKind::Kde) => Prepared::Density(DensityModel::parse(text)?),
            (ModelConfig::Regression(reg), EstimatorKind::Lc | EstimatorKind::Ll) => {
                if self.h_rule == BandwidthRule::Amise {
                    return bad("the AMISE rule applies to density estimation only".into());
                }
                if self.query_angles.is_empty() || self.query_angles.iter().any(|a| !a.is_finite()) {
                    return bad("query_angles must be a non-empty list of finite angles".into());
                }
                if let ResponseNoise::Gaussian { sd } = reg.noise {
                    if !(sd >= 0.0) {
                        return bad(format!("noise sd must be non-negative, got {sd}"));
                    }
                }
                Prepared::Regression(reg.build()?)
            }
            (ModelConfig::Density(_), _) => return bad("a density model needs the kde estimator".into()),
            (ModelConfig::Regression(_), _) => return bad("a regression model needs the lc or ll estimator".into()),
        };
        Ok((prepared, kernel))
    }

    /// Expected log-log slope of the error measure: `−4/5` for the density
    /// AMISE rule; `−min(4γ/(β⊕−1), (1−γ)/(β̃−1))` for power-law rules.
    pub fn theory_slope(&self) -> Option<f64> {
        match (self.estimator, self.h_rule) {
            (EstimatorKind::Kde, BandwidthRule::Amise) => Some(-0.8),
            (EstimatorKind::Kde, BandwidthRule::PowerLaw { gamma, .. }) => Some(-(4.0 * gamma).min(1.0 - gamma)),
            (_, BandwidthRule::PowerLaw { gamma, .. }) => {
                Some(-(4.0 * gamma / (self.beta_oplus - 1.0)).min((1.0 - gamma) / (self.beta_tilde - 1.0)))
            }
            _ => None,
        }
    }
}

/// Ordinary least squares of `ln y` on `ln x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 2 {
        return Err(Error::Domain("a slope fit needs at least 2 points".into()));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0) || !(*y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::Domain("log-log fit needs positive finite coordinates".into()));
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("log-log fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(LogLogFit {
        slope,
        intercept,
        r_squared,
    })
}

fn bandwidth_for(rule: BandwidthRule, n: usize, prepared: &Prepared, kernel: &DirectionalKernel) -> Result<f64> {
    match rule {
        BandwidthRule::Fixed(h) => Ok(h),
        BandwidthRule::PowerLaw { gamma, c } => Ok(c * (n as f64).powf(-gamma)),
        BandwidthRule::Amise => match prepared {
            Prepared::Density(m) => h_amise(score_sf(m)?, kernel, n),
            Prepared::Regression(_) => Err(Error::InvalidConfig("AMISE rule needs a density model".into())),
        },
    }
}

fn soft_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::EmptyWindow { .. } | Error::SingularDesign { .. } | Error::DegenerateWeights(_)
    )
}

fn replicate_error(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    kernel: &DirectionalKernel,
    queries: &[Angle],
    n: usize,
    h: f64,
    seed: u64,
) -> Result<f64> {
    match prepared {
        Prepared::Density(model) => {
            let sample = model.sample(n, seed)?;
            Ok(integrated_squared_error(&KernelDensity::new(kernel, &sample, h)?, model))
        }
        Prepared::Regression(model) => {
            let sample = model.sample(n, seed)?;
            let space = model.space();
            let mut sum = CompensatedSum::new();
            for &x in queries {
                let est = match cfg.estimator {
                    EstimatorKind::Ll => ll_estimate(&space, &sample, kernel, h, x)?,
                    _ => lc_estimate(&space, &sample, kernel, h, x)?,
                };
                sum.add(space.squared_distance(&est.minimizer, &model.truth_point(x))?);
            }
            Ok(sum.value() / queries.len() as f64)
        }
    }
}

/// Runs the experiment. Replicate `r` at size `n` uses the seed derived from
/// `(seed, n, r)`, and all reductions run in a fixed order, so the report
/// does not depend on the thread count.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    let (prepared, kernel) = cfg.prepare()?;
    let queries: Vec<Angle> = cfg.query_angles.iter().map(|a| Angle::new(*a)).collect();
    let hs: Vec<f64> = cfg
        .n_list
        .iter()
        .map(|&n| bandwidth_for(cfg.h_rule, n, &prepared, &kernel))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.n_list.len())
        .flat_map(|i| (0..cfg.reps).map(move |r| (i, r)))
        .collect();
    let outcomes: Vec<std::result::Result<f64, Error>> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let n = cfg.n_list[i];
            replicate_error(cfg, &prepared, &kernel, &queries, n, hs[i], derive_seed(cfg.seed, n as u64, r as u64))
        })
        .collect();

    let mut points = Vec::with_capacity(cfg.n_list.len());
    let mut census = Vec::new();
    for (i, &n) in cfg.n_list.iter().enumerate() {
        let chunk = &outcomes[i * cfg.reps..(i + 1) * cfg.reps];
        let mut values = Vec::with_capacity(cfg.reps);
        let mut failures: Vec<&'static str> = Vec::new();
        for o in chunk {
            match o {
                Ok(v) => values.push(*v),
                Err(e) if soft_failure(e) => failures.push(e.name()),
                Err(e) => return Err(Error::ExperimentInvalid(format!("replicate at n = {n} failed: {e}"))),
            }
        }
        if failures.len() as f64 > MAX_FAILURE_SHARE * cfg.reps as f64 || values.len() < 2 {
            let mut kinds = failures.clone();
            kinds.sort_unstable();
            kinds.dedup();
            let detail: Vec<String> = kinds
                .iter()
                .map(|k| format!("{k} x{}", failures.iter().filter(|f| *f == k).count()))
                .collect();
            census.push(format!("n = {n}: {}/{} failed ({})", failures.len(), cfg.reps, detail.join(", ")));
            continue;
        }
        let m = values.len() as f64;
        let mean = values.iter().copied().collect::<CompensatedSum>().value() / m;
        let var = values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .collect::<CompensatedSum>()
            .value()
            / (m - 1.0);
        points.push(RatePoint {
            n,
            h: hs[i],
            error: mean,
            stderr: (var / m).sqrt(),
            failures: failures.len(),
        });
    }
    if !census.is_empty() {
        return Err(Error::ExperimentInvalid(format!(
            "too many failed replicates: {}",
            census.join("; ")
        )));
    }
    let fit = fit_loglog_slope(&points.iter().map(|p| (p.n as f64, p.error)).collect::<Vec<_>>())?;
    Ok(RateReport {
        config_echo: cfg.clone(),
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        theory_slope: cfg.theory_slope(),
        wall_time_seconds: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kde_config() -> ExperimentConfig {
        ExperimentConfig {
            estimator: EstimatorKind::Kde,
            model: ModelConfig::Density("von_mises:0:1".into()),
            kernel: "von_mises".into(),
            n_list: vec![100, 400],
            h_rule: BandwidthRule::Amise,
            reps: 2,
            seed: 7,
            query_angles: default_query_angles(),
            beta_oplus: 2.0,
            beta_tilde: 2.0,
        }
    }

    #[test]
    fn slope_examples() {
        let f = fit_loglog_slope(&[(1.0, 1.0), (10.0, 0.1)]).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-15);
        assert_eq!(f.r_squared, 1.0);
        let f = fit_loglog_slope(&[(1.0, 2.0), (10.0, 2.0)]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r_squared, 1.0);
        let pts: Vec<(f64, f64)> = [500.0, 1000.0, 2000.0, 4000.0, 8000.0f64]
            .iter()
            .map(|n| (*n, 3.0 * n.powf(-0.8)))
            .collect();
        let f = fit_loglog_slope(&pts).unwrap();
        assert!((f.slope + 0.8).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_loglog_slope(&[(1.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 0.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn smallest_valid_config() {
        let r = run_rate_experiment(&kde_config()).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!((0.0..=1.0).contains(&r.r_squared));
        assert_eq!(r.theory_slope, Some(-0.8));
        assert!(r.wall_time_seconds.is_none());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = kde_config();
        c.reps = 1;
        assert_eq!(c.validate().unwrap_err().name(), "invalid-config");
        let mut c = kde_config();
        c.n_list = vec![400, 100];
        assert!(c.validate().is_err());
        let mut c = kde_config();
        c.estimator = EstimatorKind::Lc;
        assert!(c.validate().is_err());
        let mut c = kde_config();
        c.h_rule = BandwidthRule::PowerLaw { gamma: 1.2, c: 1.0 };
        assert!(c.validate().is_err());
        let mut c = kde_config();
        c.kernel = "gaussian".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn theory_slope_bookkeeping() {
        let c = ExperimentConfig {
            estimator: EstimatorKind::Ll,
            model: ModelConfig::Regression(RegressionConfig {
                predictor: "von_mises:0:2".into(),
                truth: TruthFunction::sine(),
                noise: ResponseNoise::Gaussian { sd: 0.1 },
            }),
            h_rule: BandwidthRule::PowerLaw { gamma: 0.2, c: 1.0 },
            ..kde_config()
        };
        assert!((c.theory_slope().unwrap() + 0.8).abs() < 1e-15);
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{
            "estimator": "lc",
            "model": {"regression": {"predictor": "von_mises:0:2", "noise": {"gaussian": {"sd": 0.1}}}},
            "n_list": [50, 100],
            "h_rule": {"power_law": {"gamma": 0.2, "c": 1.0}},
            "reps": 3,
            "seed": 11
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.query_angles.len(), 16);
        assert_eq!(c.kernel, "von_mises");
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let r = run_rate_experiment(&c).unwrap();
        assert_eq!(r.points.len(), 2);
    }

    #[test]
    fn failures_beyond_share_invalidate() {
        // a uniform kernel window far too small for n = 20 leaves queries empty
        let c = ExperimentConfig {
            estimator: EstimatorKind::Lc,
            model: ModelConfig::Regression(RegressionConfig {
                predictor: "von_mises:0:1".into(),
                truth: TruthFunction::sine(),
                noise: ResponseNoise::Gaussian { sd: 0.1 },
            }),
            kernel: "uniform".into(),
            n_list: vec![20, 40],
            h_rule: BandwidthRule::Fixed(0.01),
            reps: 10,
            ..kde_config()
        };
        let err = run_rate_experiment(&c).unwrap_err();
        assert_eq!(err.name(), "experiment-invalid");
        assert!(err.to_string().contains("empty-window"));
    }
}
