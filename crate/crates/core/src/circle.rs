//! Geometry of the unit circle: canonical angles, the rotation
//! parametrisation `Φ_x(θ) = x cos θ + (Rx) sin θ`, its inverse, chord
//! arguments, and exact von Mises sampling.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_bandwidth, Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// An angle in radians, stored in the canonical range `[−π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn new(radians: f64) -> Self {
        Angle(canonicalize(radians))
    }

    pub fn from_degrees(degrees: f64) -> Self {
        Angle::new(degrees.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn to_unit(self) -> UnitVector2 {
        let (s, c) = self.0.sin_cos();
        UnitVector2 { x1: c, x2: s }
    }

    /// `Φ_origin^{−1}(self)`: the signed angle that rotates `origin` onto `self`.
    pub fn offset_from(self, origin: Angle) -> Angle {
        Angle::new(self.0 - origin.0)
    }

    /// `Φ_self(theta)` expressed as an angle.
    pub fn rotated(self, theta: f64) -> Angle {
        Angle::new(self.0 + theta)
    }

    /// Shorter-arc distance in `[0, π]`.
    pub fn arc_distance(self, other: Angle) -> f64 {
        other.offset_from(self).0.abs()
    }
}

impl From<f64> for Angle {
    fn from(v: f64) -> Self {
        Angle::new(v)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> Self {
        a.0
    }
}

/// Maps any real to `[−π, π)`. Values already in range are returned unchanged.
pub fn canonicalize(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let r = theta.rem_euclid(TAU);
    let out = if r >= PI { r - TAU } else { r };
    if out < -PI {
        -PI
    } else {
        out
    }
}

/// The chord argument `(1 − cos δ)/h²` for an angular offset `δ`, computed
/// as `2 sin²(δ/2)/h²` to keep precision for small offsets.
#[inline]
pub fn chord_term(delta: f64, h: f64) -> f64 {
    let s = (0.5 * delta).sin();
    2.0 * s * s / (h * h)
}

/// A point of S¹ ⊂ ℝ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector2 {
    pub x1: f64,
    pub x2: f64,
}

impl UnitVector2 {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        let v = UnitVector2 { x1, x2 };
        v.check()?;
        Ok(v)
    }

    fn check(&self) -> Result<()> {
        let norm2 = self.x1 * self.x1 + self.x2 * self.x2;
        if (norm2 - 1.0).abs() <= UNIT_TOL {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "({}, {}) is not a unit vector (squared norm {norm2})",
                self.x1, self.x2
            )))
        }
    }

    pub fn dot(&self, other: &UnitVector2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// `R x`, the quarter-turn counter-clockwise.
    pub fn perp(&self) -> UnitVector2 {
        UnitVector2 {
            x1: -self.x2,
            x2: self.x1,
        }
    }

    pub fn angle(&self) -> Angle {
        Angle::new(self.x2.atan2(self.x1))
    }

    pub fn distance(&self, other: &UnitVector2) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }
}

/// `Φ_x(θ) = x cos θ + (Rx) sin θ`.
pub fn rotate(x: UnitVector2, theta: Angle) -> Result<UnitVector2> {
    x.check()?;
    let (s, c) = theta.radians().sin_cos();
    let r = x.perp();
    Ok(UnitVector2 {
        x1: x.x1 * c + r.x1 * s,
        x2: x.x2 * c + r.x2 * s,
    })
}

/// The unique `θ ∈ [−π, π)` with `Φ_x(θ) = z`.
pub fn angle_between(x: UnitVector2, z: UnitVector2) -> Result<Angle> {
    x.check()?;
    z.check()?;
    let cos = x.dot(&z);
    let sin = x.perp().dot(&z);
    Ok(Angle::new(sin.atan2(cos)))
}

/// `(1 − ⟨z, x⟩)/h²` for unit vectors.
pub fn chord_arg(x: UnitVector2, z: UnitVector2, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let theta = angle_between(x, z)?;
    Ok(chord_term(theta.radians(), h))
}

/// Observed angles `X_1, …, X_n`, optionally tagged with the seed that generated them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularSample {
    angles: Vec<Angle>,
    pub seed: Option<u64>,
}

impl CircularSample {
    pub fn new(angles: Vec<Angle>) -> Self {
        Self { angles, seed: None }
    }

    pub fn from_radians<I: IntoIterator<Item = f64>>(values: I) -> Self {
        Self::new(values.into_iter().map(Angle::new).collect())
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn rotated(&self, theta: f64) -> Self {
        Self {
            angles: self.angles.iter().map(|a| a.rotated(theta)).collect(),
            seed: self.seed,
        }
    }

    /// Length of the mean resultant vector, in `[0, 1]`.
    pub fn mean_resultant_length(&self) -> f64 {
        let (c, s) = self.resultant();
        (c * c + s * s).sqrt()
    }

    /// Circular mean direction.
    pub fn circular_mean(&self) -> Angle {
        let (c, s) = self.resultant();
        Angle::new(s.atan2(c))
    }

    fn resultant(&self) -> (f64, f64) {
        let n = self.angles.len().max(1) as f64;
        let (c, s) = self
            .angles
            .iter()
            .fold((0.0, 0.0), |(c, s), a| (c + a.0.cos(), s + a.0.sin()));
        (c / n, s / n)
    }
}

/// Draws one von Mises(0, κ) variate with the Best–Fisher rejection scheme.
pub fn draw_von_mises<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return -PI + TAU * rng.random::<f64>();
    }
    // ρ = (τ − √(2τ))/(2κ), τ = 1 + √(1 + 4κ²), in a cancellation-free form
    let s = (1.0 + 4.0 * kappa * kappa).sqrt();
    let tau = 1.0 + s;
    let rho = 2.0 * kappa * tau / ((s + 1.0) * (tau + (2.0 * tau).sqrt()));
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) > u2 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            let u3: f64 = rng.random();
            return if u3 < 0.5 { -theta } else { theta };
        }
    }
}

/// `n` i.i.d. draws from von Mises(μ, κ); κ = 0 gives the uniform law.
pub fn sample_von_mises(mu: Angle, kappa: f64, n: usize, seed: u64) -> Result<CircularSample> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("concentration must be non-negative, got {kappa}")));
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles = (0..n)
        .map(|_| mu.rotated(draw_von_mises(&mut rng, kappa)))
        .collect();
    Ok(CircularSample {
        angles,
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: UnitVector2, b: UnitVector2, tol: f64) -> bool {
        (a.x1 - b.x1).abs() < tol && (a.x2 - b.x2).abs() < tol
    }

    #[test]
    fn canonical_range_and_boundary() {
        assert_eq!(Angle::new(PI).radians(), -PI);
        assert_eq!(Angle::new(-PI).radians(), -PI);
        assert!((Angle::new(3.0 * FRAC_PI_2).radians() + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(Angle::new(0.25).radians(), 0.25);
        assert_eq!(Angle::from_degrees(180.0).radians(), -PI);
    }

    #[test]
    fn rotate_examples() {
        let e1 = UnitVector2::new(1.0, 0.0).unwrap();
        let e2 = UnitVector2::new(0.0, 1.0).unwrap();
        assert!(close(rotate(e1, Angle::new(FRAC_PI_2)).unwrap(), e2, 1e-15));
        assert_eq!(rotate(e2, Angle::ZERO).unwrap(), e2);
        let got = rotate(e2, Angle::new(FRAC_PI_2)).unwrap();
        assert!(close(got, UnitVector2 { x1: -1.0, x2: 0.0 }, 1e-15));
    }

    #[test]
    fn rotate_rejects_non_unit() {
        let bad = UnitVector2 { x1: 1.0, x2: 0.1 };
        assert_eq!(rotate(bad, Angle::ZERO).unwrap_err().name(), "domain");
        assert!(UnitVector2::new(2.0, 0.0).is_err());
    }

    #[test]
    fn angle_between_examples() {
        let e1 = UnitVector2::new(1.0, 0.0).unwrap();
        let e2 = UnitVector2::new(0.0, 1.0).unwrap();
        let w = UnitVector2::new(-1.0, 0.0).unwrap();
        assert_eq!(angle_between(e1, e1).unwrap().radians(), 0.0);
        assert!((angle_between(e1, e2).unwrap().radians() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(angle_between(e1, w).unwrap().radians(), -PI);
    }

    #[test]
    fn chord_arg_examples() {
        let e1 = UnitVector2::new(1.0, 0.0).unwrap();
        let e2 = UnitVector2::new(0.0, 1.0).unwrap();
        let w = UnitVector2::new(-1.0, 0.0).unwrap();
        assert_eq!(chord_arg(e1, e1, 0.3).unwrap(), 0.0);
        assert!((chord_arg(e1, w, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((chord_arg(e1, e2, 0.5).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(chord_arg(e1, e2, 0.0).unwrap_err().name(), "domain");
    }

    #[test]
    fn isometry_on_grid() {
        let x = Angle::new(0.7).to_unit();
        for i in 0..1000 {
            let theta = -PI + TAU * i as f64 / 1000.0;
            let z = rotate(x, Angle::new(theta)).unwrap();
            let d = z.distance(&x);
            assert!((d - 2.0 * (0.5 * theta).sin().abs()).abs() < 1e-12);
            assert!(d <= theta.abs() + 1e-15);
        }
    }

    #[test]
    fn von_mises_uniform_case_has_small_resultant() {
        let s = sample_von_mises(Angle::ZERO, 0.0, 100_000, 11).unwrap();
        assert!(s.mean_resultant_length() < 0.02);
        assert!(s.angles().iter().all(|a| (-PI..PI).contains(&a.radians())));
    }

    #[test]
    fn von_mises_concentrated_mean() {
        let mu = Angle::new(2.5);
        let s = sample_von_mises(mu, 4.0, 100_000, 5).unwrap();
        assert!(s.circular_mean().arc_distance(mu) < 0.02);
        // mean resultant length of vM(κ=4) is I1(4)/I0(4) ≈ 0.8635
        assert!((s.mean_resultant_length() - 0.863_5).abs() < 0.005);
    }

    #[test]
    fn von_mises_is_deterministic_given_seed() {
        let a = sample_von_mises(Angle::new(1.0), 2.0, 500, 99).unwrap();
        let b = sample_von_mises(Angle::new(1.0), 2.0, 500, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_von_mises(Angle::new(1.0), 2.0, 500, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn von_mises_tiny_concentration_is_finite() {
        let s = sample_von_mises(Angle::ZERO, 1e-9, 1000, 1).unwrap();
        assert!(s.angles().iter().all(|a| a.radians().is_finite()));
    }

    #[test]
    fn sampler_rejects_bad_inputs() {
        assert!(sample_von_mises(Angle::ZERO, -1.0, 10, 0).is_err());
        assert!(sample_von_mises(Angle::ZERO, 1.0, 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn canonicalization_is_idempotent_and_periodic(theta in -50.0f64..50.0) {
            let a = Angle::new(theta).radians();
            prop_assert!((-PI..PI).contains(&a));
            prop_assert_eq!(Angle::new(a).radians(), a);
            let b = Angle::new(theta + TAU).radians();
            let diff = (a - b).abs();
            prop_assert!(diff < 1e-12 || (TAU - diff).abs() < 1e-12);
        }

        #[test]
        fn round_trip_through_rotation(x in -PI..PI, theta in -3.1f64..3.1) {
            let xv = Angle::new(x).to_unit();
            let z = rotate(xv, Angle::new(theta)).unwrap();
            let back = angle_between(xv, z).unwrap().radians();
            prop_assert!((back - theta).abs() < 1e-12);
        }

        #[test]
        fn rotation_equivariance(x in -PI..PI, z in -PI..PI, q in -PI..PI) {
            let (xv, zv) = (Angle::new(x).to_unit(), Angle::new(z).to_unit());
            let qx = rotate(xv, Angle::new(q)).unwrap();
            let qz = rotate(zv, Angle::new(q)).unwrap();
            let a = angle_between(xv, zv).unwrap().radians();
            let b = angle_between(qx, qz).unwrap().radians();
            let diff = (a - b).abs();
            prop_assert!(diff < 1e-12 || (TAU - diff).abs() < 1e-12);
        }

        #[test]
        fn chord_arg_matches_cosine(x in -PI..PI, z in -PI..PI, h in 0.05f64..3.0) {
            let (xv, zv) = (Angle::new(x).to_unit(), Angle::new(z).to_unit());
            let s = chord_arg(xv, zv, h).unwrap();
            let theta = angle_between(xv, zv).unwrap().radians();
            prop_assert!((s * h * h - (1.0 - theta.cos())).abs() < 1e-12);
            prop_assert!(s >= 0.0 && s <= 2.0 / (h * h) + 1e-12);
        }
    }
}
