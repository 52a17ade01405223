//! Response spaces `(Ω, d)` and the weighted Fréchet mean
//! `argmin_y Σ_i w_i d²(y_i, y)` shared by both regression estimators.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::Angle;
use crate::error::{Error, Result};

/// Default number of probability levels for quantile-function responses.
pub const DEFAULT_QUANTILE_LEVELS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponsePoint {
    /// A vector in ℝ^d.
    Euclidean(Vec<f64>),
    /// A point of S¹ with the geodesic (arc-length) metric.
    Arc(Angle),
    /// A quantile function sampled on equispaced probability levels.
    Quantiles(Vec<f64>),
}

impl ResponsePoint {
    pub fn scalar(v: f64) -> Self {
        ResponsePoint::Euclidean(vec![v])
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            ResponsePoint::Euclidean(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    /// The payload as a flat list of numbers (angles in radians).
    pub fn components(&self) -> Vec<f64> {
        match self {
            ResponsePoint::Euclidean(v) | ResponsePoint::Quantiles(v) => v.clone(),
            ResponsePoint::Arc(a) => vec![a.radians()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    EuclideanReal { dim: usize },
    CircleArc,
    Wasserstein1D { levels: usize },
}

/// Where exhaustive minimisation looks for the Fréchet mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidatePolicy {
    /// Observed responses with non-zero weight.
    SampleOnly,
    /// Observed responses plus an equispaced grid of the given resolution
    /// (circle, or the observed range for scalar reals).
    SampleAndGrid(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    pub kind: SpaceKind,
    pub candidates: CandidatePolicy,
    pub diameter_bound: Option<f64>,
}

/// Result of a weighted Fréchet mean or a regression estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrechetEstimate {
    pub minimizer: ResponsePoint,
    pub objective: f64,
    /// Zero when a closed form was used.
    pub candidates_evaluated: usize,
    /// Objective gap to the second-best candidate; `None` for closed forms or
    /// single-candidate searches.
    pub runner_up_gap: Option<f64>,
}

/// Probability levels `0.005 … 0.995` (for 101 levels) used for quantile responses.
pub fn quantile_levels(levels: usize) -> Vec<f64> {
    if levels == 1 {
        return vec![0.5];
    }
    let lo = 0.5 / (levels - 1) as f64;
    (0..levels)
        .map(|i| lo + (1.0 - 2.0 * lo) * i as f64 / (levels - 1) as f64)
        .collect()
}

fn check_monotone(q: &[f64]) -> Result<()> {
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidPoint("quantile vector has non-finite entries".into()));
    }
    if let Some(i) = q.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidPoint(format!(
            "non-monotone quantiles at level {} ({} > {})",
            i + 1,
            q[i],
            q[i + 1]
        )));
    }
    Ok(())
}

impl MetricSpace {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            kind: SpaceKind::EuclideanReal { dim },
            candidates: CandidatePolicy::SampleOnly,
            diameter_bound: None,
        }
    }

    pub fn circle() -> Self {
        Self {
            kind: SpaceKind::CircleArc,
            candidates: CandidatePolicy::SampleAndGrid(2048),
            diameter_bound: Some(PI),
        }
    }

    pub fn wasserstein(levels: usize) -> Self {
        Self {
            kind: SpaceKind::Wasserstein1D { levels },
            candidates: CandidatePolicy::SampleOnly,
            diameter_bound: None,
        }
    }

    pub fn with_candidates(mut self, policy: CandidatePolicy) -> Self {
        self.candidates = policy;
        self
    }

    pub fn with_diameter_bound(mut self, bound: Option<f64>) -> Self {
        self.diameter_bound = bound;
        self
    }

    /// Checks that `y` has the payload and shape this space expects.
    pub fn check_point(&self, y: &ResponsePoint) -> Result<()> {
        match (&self.kind, y) {
            (SpaceKind::EuclideanReal { dim }, ResponsePoint::Euclidean(v)) => {
                if v.len() != *dim {
                    return Err(Error::TypeMismatch(format!("expected dimension {dim}, got {}", v.len())));
                }
                Ok(())
            }
            (SpaceKind::CircleArc, ResponsePoint::Arc(_)) => Ok(()),
            (SpaceKind::Wasserstein1D { levels }, ResponsePoint::Quantiles(q)) => {
                if q.len() != *levels {
                    return Err(Error::TypeMismatch(format!("expected {levels} quantile levels, got {}", q.len())));
                }
                check_monotone(q)
            }
            (kind, point) => Err(Error::TypeMismatch(format!(
                "{} payload does not belong to {kind:?}",
                match point {
                    ResponsePoint::Euclidean(_) => "euclidean",
                    ResponsePoint::Arc(_) => "arc",
                    ResponsePoint::Quantiles(_) => "quantile",
                }
            ))),
        }
    }

    pub fn distance(&self, a: &ResponsePoint, b: &ResponsePoint) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(self.squared_distance_unchecked(a, b).sqrt())
    }

    /// `d²(a, b)` for points already validated against this space.
    pub(crate) fn squared_distance_unchecked(&self, a: &ResponsePoint, b: &ResponsePoint) -> f64 {
        match (a, b) {
            (ResponsePoint::Euclidean(x), ResponsePoint::Euclidean(y)) => {
                x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum()
            }
            (ResponsePoint::Arc(x), ResponsePoint::Arc(y)) => {
                let d = x.arc_distance(*y);
                d * d
            }
            (ResponsePoint::Quantiles(x), ResponsePoint::Quantiles(y)) => {
                x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / x.len() as f64
            }
            _ => f64::NAN,
        }
    }

    pub fn squared_distance(&self, a: &ResponsePoint, b: &ResponsePoint) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(self.squared_distance_unchecked(a, b))
    }

    /// `Σ_i w_i d²(y_i, y)` for validated points.
    pub fn weighted_objective(&self, points: &[ResponsePoint], weights: &[f64], y: &ResponsePoint) -> f64 {
        points
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(p, w)| w * self.squared_distance_unchecked(p, y))
            .sum()
    }

    /// Minimises `Σ_i w_i d²(y_i, y)`.
    ///
    /// Closed forms are used for Euclidean responses with positive total
    /// weight and for quantile responses with non-negative weights; all
    /// other cases search the candidate set exhaustively, breaking ties by
    /// the lowest candidate index.
    pub fn weighted_frechet_mean(&self, points: &[ResponsePoint], weights: &[f64]) -> Result<FrechetEstimate> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        if points.len() != weights.len() {
            return Err(Error::Domain(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("weights must be finite".into()));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::DegenerateWeights("all weights are zero".into()));
        }
        for p in points {
            self.check_point(p)?;
        }

        let total: f64 = weights.iter().sum();
        let abs_total: f64 = weights.iter().map(|w| w.abs()).sum();
        match self.kind {
            SpaceKind::EuclideanReal { dim } => {
                if total.abs() <= 1e-14 * abs_total {
                    return Err(Error::DegenerateWeights(format!(
                        "weights sum to {total:e}; the objective has no minimiser"
                    )));
                }
                if total > 0.0 {
                    let mut mean = vec![0.0; dim];
                    for (p, w) in points.iter().zip(weights) {
                        if let ResponsePoint::Euclidean(v) = p {
                            for (m, x) in mean.iter_mut().zip(v) {
                                *m += w * x;
                            }
                        }
                    }
                    mean.iter_mut().for_each(|m| *m /= total);
                    let minimizer = ResponsePoint::Euclidean(mean);
                    let objective = self.weighted_objective(points, weights, &minimizer);
                    return Ok(FrechetEstimate {
                        minimizer,
                        objective,
                        candidates_evaluated: 0,
                        runner_up_gap: None,
                    });
                }
            }
            SpaceKind::Wasserstein1D { levels } if weights.iter().all(|w| *w >= 0.0) => {
                let mut mean = vec![0.0; levels];
                for (p, w) in points.iter().zip(weights) {
                    if let ResponsePoint::Quantiles(q) = p {
                        for (m, x) in mean.iter_mut().zip(q) {
                            *m += w * x;
                        }
                    }
                }
                mean.iter_mut().for_each(|m| *m /= total);
                // a convex combination of monotone vectors is monotone up to rounding
                for i in 1..levels {
                    if mean[i] < mean[i - 1] {
                        mean[i] = mean[i - 1];
                    }
                }
                let minimizer = ResponsePoint::Quantiles(mean);
                let objective = self.weighted_objective(points, weights, &minimizer);
                return Ok(FrechetEstimate {
                    minimizer,
                    objective,
                    candidates_evaluated: 0,
                    runner_up_gap: None,
                });
            }
            _ => {}
        }
        Ok(self.search_candidates(points, weights))
    }

    /// Candidate set: responses with non-zero weight, then the optional grid.
    pub fn candidate_set(&self, points: &[ResponsePoint], weights: &[f64]) -> Vec<ResponsePoint> {
        let mut out: Vec<ResponsePoint> = points
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w != 0.0)
            .map(|(p, _)| p.clone())
            .collect();
        if let CandidatePolicy::SampleAndGrid(m) = self.candidates {
            match self.kind {
                SpaceKind::CircleArc => {
                    out.extend((0..m).map(|k| ResponsePoint::Arc(Angle::new(-PI + TAU * k as f64 / m as f64))));
                }
                SpaceKind::EuclideanReal { dim: 1 } if m >= 2 => {
                    let (lo, hi) = out
                        .iter()
                        .filter_map(|p| p.as_scalar())
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
                    if lo.is_finite() && hi > lo {
                        out.extend(
                            (0..m).map(|k| ResponsePoint::scalar(lo + (hi - lo) * k as f64 / (m - 1) as f64)),
                        );
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn search_candidates(&self, points: &[ResponsePoint], weights: &[f64]) -> FrechetEstimate {
        let candidates = self.candidate_set(points, weights);
        let scored: Vec<(f64, usize)> = candidates
            .par_iter()
            .enumerate()
            .map(|(i, c)| (self.weighted_objective(points, weights, c), i))
            .collect();
        let better = |a: &(f64, usize), b: &(f64, usize)| match a.0.total_cmp(&b.0) {
            Ordering::Equal => a.1.cmp(&b.1),
            o => o,
        };
        let best = *scored.iter().min_by(|a, b| better(a, b)).expect("non-empty candidates");
        let runner_up = scored
            .iter()
            .filter(|s| s.1 != best.1)
            .min_by(|a, b| better(a, b))
            .map(|s| s.0 - best.0);
        FrechetEstimate {
            minimizer: candidates[best.1].clone(),
            objective: best.0,
            candidates_evaluated: candidates.len(),
            runner_up_gap: runner_up,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: f64) -> ResponsePoint {
        ResponsePoint::scalar(v)
    }

    #[test]
    fn distance_examples() {
        let e = MetricSpace::euclidean(1);
        assert_eq!(e.distance(&s(3.0), &s(7.0)).unwrap(), 4.0);
        let c = MetricSpace::circle();
        let d = c
            .distance(&ResponsePoint::Arc(Angle::ZERO), &ResponsePoint::Arc(Angle::new(1.5 * PI)))
            .unwrap();
        assert!((d - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn distance_type_errors() {
        let e = MetricSpace::euclidean(1);
        let err = e.distance(&s(1.0), &ResponsePoint::Arc(Angle::ZERO)).unwrap_err();
        assert_eq!(err.name(), "type");
        assert_eq!(e.distance(&s(1.0), &ResponsePoint::Euclidean(vec![1.0, 2.0])).unwrap_err().name(), "type");
        let w = MetricSpace::wasserstein(3);
        let bad = ResponsePoint::Quantiles(vec![0.0, 2.0, 1.0]);
        let ok = ResponsePoint::Quantiles(vec![0.0, 1.0, 2.0]);
        assert_eq!(w.distance(&bad, &ok).unwrap_err().name(), "invalid-point");
    }

    #[test]
    fn quantile_levels_default() {
        let l = quantile_levels(DEFAULT_QUANTILE_LEVELS);
        assert_eq!(l.len(), 101);
        assert!((l[0] - 0.005).abs() < 1e-15);
        assert!((l[100] - 0.995).abs() < 1e-15);
        assert!((l[50] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn frechet_mean_examples() {
        let e = MetricSpace::euclidean(1);
        let pts = vec![s(1.0), s(2.0), s(3.0)];
        let m = e.weighted_frechet_mean(&pts, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.minimizer, s(2.0));
        let first = e.weighted_frechet_mean(&pts, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(first.minimizer, s(1.0));
        assert_eq!(first.objective, 0.0);

        let c = MetricSpace::circle().with_candidates(CandidatePolicy::SampleAndGrid(2048));
        let arcs: Vec<_> = [-0.1, 0.0, 0.1].iter().map(|v| ResponsePoint::Arc(Angle::new(*v))).collect();
        let m = c.weighted_frechet_mean(&arcs, &[1.0; 3]).unwrap();
        if let ResponsePoint::Arc(a) = m.minimizer {
            assert!(a.radians().abs() <= TAU / 2048.0);
        } else {
            panic!("expected an arc");
        }
        assert_eq!(m.candidates_evaluated, 3 + 2048);
    }

    #[test]
    fn frechet_mean_degenerate_weights() {
        let e = MetricSpace::euclidean(1);
        let pts = vec![s(1.0), s(2.0)];
        assert_eq!(e.weighted_frechet_mean(&pts, &[0.0, 0.0]).unwrap_err().name(), "degenerate-weights");
        assert_eq!(e.weighted_frechet_mean(&pts, &[1.0, -1.0]).unwrap_err().name(), "degenerate-weights");
        assert!(e.weighted_frechet_mean(&pts, &[1.0]).is_err());
    }

    #[test]
    fn negative_total_weight_falls_back_to_candidates() {
        let e = MetricSpace::euclidean(1);
        let pts = vec![s(0.0), s(1.0), s(5.0)];
        let m = e.weighted_frechet_mean(&pts, &[1.0, -3.0, 0.5]).unwrap();
        // objective is concave, so the best candidate is the extreme one
        assert_eq!(m.candidates_evaluated, 3);
        assert_eq!(m.minimizer, s(5.0));
    }

    #[test]
    fn wasserstein_midpoint_of_translates() {
        let levels = quantile_levels(11);
        let base: Vec<f64> = levels.iter().map(|p| (p - 0.5) * 3.0).collect();
        let a = ResponsePoint::Quantiles(base.clone());
        let b = ResponsePoint::Quantiles(base.iter().map(|v| v + 2.0).collect());
        let w = MetricSpace::wasserstein(11);
        let m = w.weighted_frechet_mean(&[a, b], &[1.0, 1.0]).unwrap();
        if let ResponsePoint::Quantiles(q) = m.minimizer {
            for (got, want) in q.iter().zip(&base) {
                assert!((got - (want + 1.0)).abs() < 1e-9);
            }
        } else {
            panic!("expected quantiles");
        }
    }

    #[test]
    fn circle_frechet_mean_signed_weights_searches() {
        let c = MetricSpace::circle().with_candidates(CandidatePolicy::SampleOnly);
        let arcs: Vec<_> = [0.0, 1.0, 2.0].iter().map(|v| ResponsePoint::Arc(Angle::new(*v))).collect();
        let m = c.weighted_frechet_mean(&arcs, &[1.0, 2.0, -0.5]).unwrap();
        assert_eq!(m.candidates_evaluated, 3);
        assert!(m.runner_up_gap.unwrap() >= 0.0);
    }

    fn arb_point(kind: u8) -> BoxedStrategy<ResponsePoint> {
        match kind {
            0 => prop::collection::vec(-10.0f64..10.0, 2).prop_map(ResponsePoint::Euclidean).boxed(),
            1 => (-PI..PI).prop_map(|a| ResponsePoint::Arc(Angle::new(a))).boxed(),
            _ => prop::collection::vec(-5.0f64..5.0, 7)
                .prop_map(|mut v| {
                    v.sort_by(|a, b| a.total_cmp(b));
                    ResponsePoint::Quantiles(v)
                })
                .boxed(),
        }
    }

    fn space(kind: u8) -> MetricSpace {
        match kind {
            0 => MetricSpace::euclidean(2),
            1 => MetricSpace::circle(),
            _ => MetricSpace::wasserstein(7),
        }
    }

    proptest! {
        #[test]
        fn weight_scaling_keeps_minimizer(
            vals in prop::collection::vec(-PI..PI, 2..12),
            ws in prop::collection::vec(0.01f64..2.0, 12),
            e in -6i32..6,
        ) {
            let c = 2f64.powi(e);
            let sp = MetricSpace::circle().with_candidates(CandidatePolicy::SampleAndGrid(64));
            let pts: Vec<_> = vals.iter().map(|v| ResponsePoint::Arc(Angle::new(*v))).collect();
            let w: Vec<f64> = ws[..pts.len()].to_vec();
            let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
            let a = sp.weighted_frechet_mean(&pts, &w).unwrap();
            let b = sp.weighted_frechet_mean(&pts, &scaled).unwrap();
            prop_assert_eq!(&a.minimizer, &b.minimizer);
            prop_assert!((b.objective - c * a.objective).abs() <= 1e-12 * b.objective.abs().max(1.0));
        }

        #[test]
        fn permutation_invariance(
            vals in prop::collection::vec(-3.0f64..3.0, 3..10),
            ws in prop::collection::vec(0.1f64..1.0, 10),
            shift in 1usize..9,
        ) {
            let sp = MetricSpace::euclidean(1);
            let pts: Vec<_> = vals.iter().map(|v| s(*v)).collect();
            let w = ws[..pts.len()].to_vec();
            let k = shift % pts.len();
            let mut p2 = pts.clone();
            let mut w2 = w.clone();
            p2.rotate_left(k);
            w2.rotate_left(k);
            let a = sp.weighted_frechet_mean(&pts, &w).unwrap().minimizer.as_scalar().unwrap();
            let b = sp.weighted_frechet_mean(&p2, &w2).unwrap().minimizer.as_scalar().unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn metric_axioms(kind in 0u8..3, seed in any::<u64>()) {
            let mut runner = proptest::test_runner::TestRunner::new_with_rng(
                Default::default(),
                proptest::test_runner::TestRng::from_seed(
                    proptest::test_runner::RngAlgorithm::ChaCha,
                    &{
                        let mut b = [0u8; 32];
                        b[..8].copy_from_slice(&seed.to_le_bytes());
                        b
                    },
                ),
            );
            let sp = space(kind);
            let strat = (arb_point(kind), arb_point(kind), arb_point(kind));
            let (a, b, c) = proptest::strategy::ValueTree::current(&strat.new_tree(&mut runner).unwrap());
            let dab = sp.distance(&a, &b).unwrap();
            prop_assert_eq!(sp.distance(&a, &a).unwrap(), 0.0);
            prop_assert!((dab - sp.distance(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!(sp.distance(&a, &c).unwrap() <= dab + sp.distance(&b, &c).unwrap() + 1e-12);
        }
    }
}
