//! Synthetic ground-truth laws used by the theory oracles and the
//! simulation harness.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circle::{draw_von_mises, Angle, CircularSample};
use crate::error::{Error, Result};
use crate::frechet_lc::PairedSample;
use crate::metric::{MetricSpace, ResponsePoint};
use crate::numeric::bessel_i0_scaled;

/// One von Mises(μ, κ) component with mixing weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonMisesComponent {
    pub weight: f64,
    pub mu: f64,
    pub kappa: f64,
}

impl VonMisesComponent {
    fn kernel(&self, theta: f64) -> (f64, f64, f64) {
        // g = w exp(κ(cos(θ−μ) − 1)) / (2π I0e(κ)), so large κ does not overflow
        let d = theta - self.mu;
        let (s, c) = d.sin_cos();
        let g = self.weight * (self.kappa * (c - 1.0)).exp() / (TAU * bessel_i0_scaled(self.kappa));
        let d1 = -self.kappa * s * g;
        let d2 = (self.kappa * self.kappa * s * s - self.kappa * c) * g;
        (g, d1, d2)
    }
}

/// A density on S¹ given as a finite mixture of von Mises laws, with
/// closed-form first and second angular derivatives. `κ = 0` components are
/// uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub name: String,
    pub components: Vec<VonMisesComponent>,
}

impl DensityModel {
    pub fn uniform() -> Self {
        Self {
            name: "uniform".into(),
            components: vec![VonMisesComponent {
                weight: 1.0,
                mu: 0.0,
                kappa: 0.0,
            }],
        }
    }

    pub fn von_mises(mu: f64, kappa: f64) -> Self {
        Self {
            name: format!("von_mises({mu},{kappa})"),
            components: vec![VonMisesComponent {
                weight: 1.0,
                mu,
                kappa,
            }],
        }
    }

    pub fn mixture(components: Vec<VonMisesComponent>) -> Result<Self> {
        let model = Self {
            name: "mixture".into(),
            components,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidConfig("density model has no components".into()));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        for c in &self.components {
            if !(c.weight > 0.0) || !(c.kappa >= 0.0) || !c.mu.is_finite() || !c.kappa.is_finite() {
                return Err(Error::InvalidConfig(format!("invalid mixture component {c:?}")));
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Parses `uniform`, `von_mises:<mu>:<kappa>` and `+`-joined mixtures of
    /// `<weight>*von_mises:<mu>:<kappa>`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "uniform" {
            return Ok(Self::uniform());
        }
        let mut components = Vec::new();
        for part in text.split('+') {
            let part = part.trim();
            let (weight, body) = match part.split_once('*') {
                Some((w, b)) => (
                    w.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad mixture weight in '{part}'")))?,
                    b.trim(),
                ),
                None => (1.0, part),
            };
            let fields: Vec<&str> = body.split(':').collect();
            let component = match fields.as_slice() {
                ["uniform"] => VonMisesComponent {
                    weight,
                    mu: 0.0,
                    kappa: 0.0,
                },
                ["von_mises", mu, kappa] | ["vm", mu, kappa] => VonMisesComponent {
                    weight,
                    mu: mu
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad mean in '{part}'")))?,
                    kappa: kappa
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad concentration in '{part}'")))?,
                },
                _ => return Err(Error::InvalidConfig(format!("cannot parse density model '{part}'"))),
            };
            components.push(component);
        }
        let model = Self {
            name: text.to_string(),
            components,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.components.iter().map(|c| c.kernel(theta).0).sum()
    }

    pub fn d1(&self, theta: f64) -> f64 {
        self.components.iter().map(|c| c.kernel(theta).1).sum()
    }

    /// Second angular derivative, which equals the Hessian trace of the
    /// radially constant extension on the circle.
    pub fn d2(&self, theta: f64) -> f64 {
        self.components.iter().map(|c| c.kernel(theta).2).sum()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<CircularSample> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles = (0..n).map(|_| self.draw(&mut rng)).collect();
        let mut s = CircularSample::new(angles);
        s.seed = Some(seed);
        Ok(s)
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Angle {
        let component = if self.components.len() == 1 {
            &self.components[0]
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = self.components.last().expect("non-empty mixture");
            for c in &self.components {
                acc += c.weight;
                if u < acc {
                    chosen = c;
                    break;
                }
            }
            chosen
        };
        Angle::new(component.mu + draw_von_mises(rng, component.kappa))
    }

    /// Minimum of the density on a fine grid.
    pub fn grid_minimum(&self) -> f64 {
        (0..4096)
            .map(|i| self.pdf(-PI + TAU * i as f64 / 4096.0))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The regression function `m⊕`, as a scalar function of the predictor angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthFunction {
    /// `amplitude · sin(θ − phase) + offset`
    Sine {
        amplitude: f64,
        phase: f64,
        offset: f64,
    },
    Constant(f64),
}

impl TruthFunction {
    pub fn sine() -> Self {
        TruthFunction::Sine {
            amplitude: 1.0,
            phase: 0.0,
            offset: 0.0,
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            TruthFunction::Sine {
                amplitude,
                phase,
                offset,
            } => amplitude * (theta - phase).sin() + offset,
            TruthFunction::Constant(c) => c,
        }
    }
}

/// How responses scatter around the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseNoise {
    /// Real responses `m(θ) + N(0, sd²)`; `sd = 0` gives noiseless data.
    Gaussian { sd: f64 },
    /// Circle-valued responses: the angle `m(θ)` perturbed by von Mises(0, κ) noise.
    VonMises { kappa: f64 },
}

/// Ground truth for Fréchet regression with circular predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub predictor: DensityModel,
    pub truth: TruthFunction,
    pub noise: ResponseNoise,
}

impl RegressionModel {
    /// `Y = sin θ + N(0, sd²)` with von Mises(0, κ) predictors.
    pub fn sine(kappa: f64, sd: f64) -> Self {
        Self {
            predictor: DensityModel::von_mises(0.0, kappa),
            truth: TruthFunction::sine(),
            noise: ResponseNoise::Gaussian { sd },
        }
    }

    pub fn space(&self) -> MetricSpace {
        match self.noise {
            ResponseNoise::Gaussian { .. } => MetricSpace::euclidean(1),
            ResponseNoise::VonMises { .. } => MetricSpace::circle(),
        }
    }

    pub fn truth_point(&self, x: Angle) -> ResponsePoint {
        let m = self.truth.eval(x.radians());
        match self.noise {
            ResponseNoise::Gaussian { .. } => ResponsePoint::Euclidean(vec![m]),
            ResponseNoise::VonMises { .. } => ResponsePoint::Arc(Angle::new(m)),
        }
    }

    /// `M⊕(θ, y) = E[d²(Y, y) | X = θ]` when it has a closed form.
    pub fn conditional_objective(&self, theta: f64, y: &ResponsePoint) -> Result<f64> {
        match (self.noise, y) {
            (ResponseNoise::Gaussian { sd }, ResponsePoint::Euclidean(v)) if v.len() == 1 => {
                let d = self.truth.eval(theta) - v[0];
                Ok(d * d + sd * sd)
            }
            (ResponseNoise::Gaussian { .. }, _) => Err(Error::TypeMismatch(
                "model responses are scalar reals".into(),
            )),
            (ResponseNoise::VonMises { .. }, _) => Err(Error::UnsupportedModel(
                "no closed-form conditional objective for circle-valued responses".into(),
            )),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<PairedSample> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut angles = Vec::with_capacity(n);
        let mut responses = Vec::with_capacity(n);
        match self.noise {
            ResponseNoise::Gaussian { sd } => {
                let normal = Normal::new(0.0, sd.max(0.0))
                    .map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
                for _ in 0..n {
                    let x = self.predictor.draw(&mut rng);
                    let e = if sd > 0.0 { normal.sample(&mut rng) } else { 0.0 };
                    responses.push(ResponsePoint::Euclidean(vec![self.truth.eval(x.radians()) + e]));
                    angles.push(x);
                }
            }
            ResponseNoise::VonMises { kappa } => {
                for _ in 0..n {
                    let x = self.predictor.draw(&mut rng);
                    let e = draw_von_mises(&mut rng, kappa);
                    responses.push(ResponsePoint::Arc(Angle::new(self.truth.eval(x.radians()) + e)));
                    angles.push(x);
                }
            }
        }
        let mut predictors = CircularSample::new(angles);
        predictors.seed = Some(seed);
        PairedSample::new(predictors, responses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, Tolerance};

    fn models() -> Vec<DensityModel> {
        vec![
            DensityModel::uniform(),
            DensityModel::von_mises(0.0, 1.0),
            DensityModel::von_mises(2.0, 40.0),
            DensityModel::parse("0.5*von_mises:0:2+0.5*von_mises:3.14159:2").unwrap(),
        ]
    }

    #[test]
    fn densities_integrate_to_one() {
        for m in models() {
            let r = integrate(|t| m.pdf(t), -PI, PI, &[], Tolerance::default());
            assert!((r.value - 1.0).abs() < 1e-8, "{}", m.name);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for m in models() {
            let eps = 1e-4;
            for i in 0..64 {
                let t = -PI + TAU * i as f64 / 64.0;
                let fd1 = (m.pdf(t + eps) - m.pdf(t - eps)) / (2.0 * eps);
                let fd2 = (m.pdf(t + eps) - 2.0 * m.pdf(t) + m.pdf(t - eps)) / (eps * eps);
                let scale = 1.0 + m.d2(t).abs();
                assert!((fd1 - m.d1(t)).abs() < 1e-6 * scale, "{} d1 at {t}", m.name);
                assert!((fd2 - m.d2(t)).abs() < 1e-6 * scale * 10.0, "{} d2 at {t}", m.name);
            }
        }
    }

    #[test]
    fn von_mises_second_derivative_at_mode() {
        // f''(0) = −κ f(0) for von Mises(0, κ)
        let m = DensityModel::von_mises(0.0, 1.0);
        assert!((m.d2(0.0) + m.pdf(0.0)).abs() < 1e-15);
        let f0 = 1f64.exp() / (TAU * 1.266_065_877_752_008_2);
        assert!((m.pdf(0.0) - f0).abs() < 1e-14);
    }

    #[test]
    fn positivity_on_grid() {
        assert!(DensityModel::von_mises(0.0, 2.0).grid_minimum() > 0.0);
    }

    #[test]
    fn parse_rejects_bad_weights() {
        assert!(DensityModel::parse("0.3*von_mises:0:1+0.3*von_mises:1:1").is_err());
        assert!(DensityModel::parse("wrapped_cauchy:0:1").is_err());
    }

    #[test]
    fn regression_sample_shapes() {
        let m = RegressionModel::sine(2.0, 0.1);
        let s = m.sample(50, 3).unwrap();
        assert_eq!(s.len(), 50);
        assert_eq!(s, m.sample(50, 3).unwrap());
    }

    #[test]
    fn conditional_objective_closed_form() {
        let m = RegressionModel::sine(1.0, 0.5);
        let v = m.conditional_objective(0.3, &ResponsePoint::Euclidean(vec![1.0])).unwrap();
        assert!((v - ((0.3f64.sin() - 1.0).powi(2) + 0.25)).abs() < 1e-15);
        let circ = RegressionModel {
            noise: ResponseNoise::VonMises { kappa: 5.0 },
            ..m
        };
        let err = circ
            .conditional_objective(0.3, &ResponsePoint::Arc(Angle::ZERO))
            .unwrap_err();
        assert_eq!(err.name(), "unsupported-model");
    }
}
