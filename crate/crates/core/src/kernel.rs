//! Directional kernels `L : [0, ∞) → [0, ∞)` applied to the scaled chord
//! term `(1 − z'x) / h²`, with their moment constants
//! `a_{j,k}(L) = ∫₀^∞ L^k(r²) r^{2j} dr` and circle-integrated constants
//! `c_{h,j,k}(L) = ∫_{−π}^{π} L^k((1 − cos θ)/h²) θ^j dθ`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_bandwidth, Error, Result};
use crate::numeric::{double_factorial, factorial};
use crate::quadrature::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    VonMises,
    Exponential,
    Uniform,
    Custom,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::VonMises => "von_mises",
            KernelFamily::Exponential => "exponential",
            KernelFamily::Uniform => "uniform",
            KernelFamily::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    ClosedForm,
    Quadrature,
}

/// `a_{j,k}(L)` together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMoment {
    pub j: u32,
    pub k: u32,
    pub value: f64,
    pub source: MomentSource,
}

/// `c_{h,j,k}(L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizingConstant {
    pub h: f64,
    pub j: u32,
    pub k: u32,
    pub value: f64,
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A non-increasing, non-negative kernel profile.
///
/// Named families carry closed-form moments. A kernel may be rescaled by a
/// positive constant with [`DirectionalKernel::scaled`]; every estimator in
/// this crate is invariant to that rescaling.
#[derive(Clone)]
pub struct DirectionalKernel {
    family: KernelFamily,
    custom: Option<Profile>,
    scale: f64,
    support_bound: Option<f64>,
}

impl fmt::Debug for DirectionalKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirectionalKernel")
            .field("family", &self.family)
            .field("scale", &self.scale)
            .field("support_bound", &self.support_bound)
            .finish()
    }
}

impl FromStr for DirectionalKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "von_mises" | "vonmises" | "von-mises" => Ok(Self::von_mises()),
            "exponential" => Ok(Self::exponential()),
            "uniform" => Ok(Self::uniform()),
            other => Err(Error::Domain(format!(
                "unknown kernel '{other}' (expected von_mises | exponential | uniform)"
            ))),
        }
    }
}

fn check_power(k: u32) -> Result<()> {
    if k == 1 || k == 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("kernel power k must be 1 or 2, got {k}")))
    }
}

impl DirectionalKernel {
    /// `L(s) = exp(−s)`.
    pub fn von_mises() -> Self {
        Self::named(KernelFamily::VonMises, None)
    }

    /// `L(r²) = exp(−r)`, i.e. `L(s) = exp(−√s)`.
    pub fn exponential() -> Self {
        Self::named(KernelFamily::Exponential, None)
    }

    /// `L(s) = 1` for `s ≤ 1`, else 0.
    pub fn uniform() -> Self {
        Self::named(KernelFamily::Uniform, Some(1.0))
    }

    fn named(family: KernelFamily, support_bound: Option<f64>) -> Self {
        Self {
            family,
            custom: None,
            scale: 1.0,
            support_bound,
        }
    }

    /// A user-supplied profile. `support_bound`, when given, is the `s` beyond
    /// which the profile vanishes; it lets integrals split exactly at the edge.
    pub fn custom<F>(profile: F, support_bound: Option<f64>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Some(b) = support_bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Domain(format!("support bound must be positive, got {b}")));
            }
        }
        let kernel = Self {
            family: KernelFamily::Custom,
            custom: Some(Arc::new(profile)),
            scale: 1.0,
            support_bound,
        };
        kernel.validate()?;
        Ok(kernel)
    }

    /// The same profile multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("kernel scale must be positive, got {c}")));
        }
        let mut out = self.clone();
        out.scale *= c;
        Ok(out)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn support_bound(&self) -> Option<f64> {
        self.support_bound
    }

    /// `L(s)`, rejecting negative or non-finite arguments.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("kernel argument must be non-negative, got {s}")));
        }
        Ok(self.value(s))
    }

    /// `L(s)` without argument checks; `s` must be non-negative.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0 || s.is_nan(), "negative kernel argument {s}");
        let base = match self.family {
            KernelFamily::VonMises => (-s).exp(),
            KernelFamily::Exponential => (-s.sqrt()).exp(),
            KernelFamily::Uniform => {
                if s <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::Custom => match self.support_bound {
                Some(b) if s > b => 0.0,
                _ => (self.custom.as_ref().expect("custom profile"))(s),
            },
        };
        self.scale * base
    }

    #[inline]
    fn value_pow(&self, s: f64, k: u32) -> f64 {
        let v = self.value(s);
        if k == 1 {
            v
        } else {
            v * v
        }
    }

    /// Checks monotonicity and non-negativity on a grid, and that `a_{0,k} > 0`.
    pub fn validate(&self) -> Result<()> {
        let top = self.support_bound.map_or(400.0, |b| b * 1.5);
        let mut prev = f64::INFINITY;
        for i in 0..=4000 {
            let s = top * (i as f64 / 4000.0).powi(2);
            let v = self.value(s);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("kernel value {v} at s = {s} is not a finite non-negative number")));
            }
            if v > prev {
                return Err(Error::Domain(format!("kernel is increasing near s = {s}")));
            }
            prev = v;
        }
        for k in [1, 2] {
            let a = self.moment_a_quadrature(0, k)?;
            if !(a.value > 0.0) {
                return Err(Error::Integrability(format!("a_{{0,{k}}} = {} is not positive", a.value)));
            }
        }
        Ok(())
    }

    /// `a_{j,k}(L)`: closed form for the named families, quadrature otherwise.
    pub fn moment_a(&self, j: u32, k: u32) -> Result<KernelMoment> {
        check_power(k)?;
        let base = match self.family {
            KernelFamily::VonMises => {
                let df = double_factorial(2 * j as i64 - 1);
                if k == 1 {
                    df / 2f64.powi(j as i32 + 1) * std::f64::consts::PI.sqrt()
                } else {
                    df / 2f64.powi(2 * j as i32 + 1) * std::f64::consts::FRAC_PI_2.sqrt()
                }
            }
            KernelFamily::Exponential => {
                let f = factorial(2 * j);
                if k == 1 {
                    f
                } else {
                    f / 2f64.powi(2 * j as i32 + 1)
                }
            }
            KernelFamily::Uniform => 1.0 / (2 * j + 1) as f64,
            KernelFamily::Custom => return self.moment_a_quadrature(j, k),
        };
        Ok(KernelMoment {
            j,
            k,
            value: base * self.scale.powi(k as i32),
            source: MomentSource::ClosedForm,
        })
    }

    /// `a_{j,k}(L)` by quadrature, regardless of family.
    ///
    /// Compactly supported profiles are integrated up to their edge. Otherwise
    /// the range `[0, R]` is extended by doubling `R` until the newest panel
    /// adds less than 1e-14 of the running total.
    pub fn moment_a_quadrature(&self, j: u32, k: u32) -> Result<KernelMoment> {
        check_power(k)?;
        let integrand = |r: f64| self.value_pow(r * r, k) * r.powi(2 * j as i32);
        let tol = Tolerance::default();
        let value = if let Some(b) = self.support_bound {
            let edge = b.sqrt();
            let r = integrate(integrand, 0.0, edge, &[], tol);
            if !r.converged {
                return Err(Error::Integrability(format!("a_{{{j},{k}}} did not converge on [0, {edge}]")));
            }
            r.value
        } else {
            let first = integrate(integrand, 0.0, 1.0, &[], tol);
            if !first.converged {
                return Err(Error::Integrability(format!("a_{{{j},{k}}} did not converge on [0, 1]")));
            }
            let mut total = first.value;
            let mut lo = 1.0;
            let mut done = false;
            for _ in 0..200 {
                let hi = 2.0 * lo;
                let panel = integrate(integrand, lo, hi, &[], tol);
                if !panel.converged {
                    return Err(Error::Integrability(format!("a_{{{j},{k}}} did not converge on [{lo}, {hi}]")));
                }
                total += panel.value;
                lo = hi;
                if panel.value.abs() < 1e-14 * total.abs() {
                    done = true;
                    break;
                }
            }
            if !done || !total.is_finite() {
                return Err(Error::Integrability(format!(
                    "a_{{{j},{k}}}: tail not negligible up to r = {lo:e}"
                )));
            }
            total
        };
        Ok(KernelMoment {
            j,
            k,
            value,
            source: MomentSource::Quadrature,
        })
    }

    /// The angle `θ* < π` beyond which `L((1 − cos θ)/h²)` vanishes, if any.
    pub fn angular_support(&self, h: f64) -> Option<f64> {
        let b = self.support_bound?;
        // 1 − cos θ ≤ b h²  ⇔  |θ| ≤ 2 asin(h √(b/2))
        let arg = h * (0.5 * b).sqrt();
        if arg < 1.0 {
            Some(2.0 * arg.asin())
        } else {
            None
        }
    }

    /// `c_{h,j,k}(L)`. Odd orders are exactly zero by symmetry.
    pub fn normalizing_c(&self, h: f64, j: u32, k: u32) -> Result<NormalizingConstant> {
        check_bandwidth(h)?;
        check_power(k)?;
        let value = if j % 2 == 1 {
            0.0
        } else {
            let jj = j as i32;
            let half = self.half_circle_integral(h, k, |v| v.powi(jj))?;
            2.0 * h.powi(jj) * half
        };
        Ok(NormalizingConstant { h, j, k, value })
    }

    /// `∫₀^{θmax} L^k((1 − cos θ)/h²) g(θ/h) dθ` computed in the scaled
    /// variable `v = θ/h`, where θmax is π or the angular support edge.
    fn half_circle_integral<G: Fn(f64) -> f64>(&self, h: f64, k: u32, g: G) -> Result<f64> {
        let theta_max = self.angular_support(h).unwrap_or(std::f64::consts::PI);
        let v_max = theta_max / h;
        let breaks = dyadic_breakpoints(v_max);
        let r = integrate(
            |v| self.value_pow(crate::circle::chord_term(h * v, h), k) * g(v),
            0.0,
            v_max,
            &breaks,
            Tolerance::default(),
        );
        if !r.converged {
            return Err(Error::Integrability(format!(
                "circle integral did not converge (h = {h}, estimate {:e} ± {:e})",
                r.value, r.error
            )));
        }
        Ok(h * r.value)
    }

    /// `∫_{−π}^{π} L^k((1 − cos t)/h²) g(t) dt` for an arbitrary angle
    /// function `g`, typically a density or moment integrand centred on a
    /// query point.
    pub fn circle_integral<G: Fn(f64) -> f64>(&self, h: f64, k: u32, g: G) -> Result<f64> {
        check_bandwidth(h)?;
        check_power(k)?;
        let theta_max = self.angular_support(h).unwrap_or(std::f64::consts::PI);
        let v_max = theta_max / h;
        let mut breaks = dyadic_breakpoints(v_max);
        let negatives: Vec<f64> = breaks.iter().map(|b| -b).collect();
        breaks.extend(negatives);
        breaks.push(0.0);
        let r = integrate(
            |v| {
                let t = h * v;
                self.value_pow(crate::circle::chord_term(t, h), k) * g(t)
            },
            -v_max,
            v_max,
            &breaks,
            Tolerance::default(),
        );
        if !r.converged {
            return Err(Error::Integrability(format!(
                "circle integral did not converge (h = {h}, estimate {:e} ± {:e})",
                r.value, r.error
            )));
        }
        Ok(h * r.value)
    }

    /// `λ_{h,j,k}(L) = ∫₀^{√2/h} L^k(r²) r^{2j} (2 − h²r²)^{−1/2} dr`.
    ///
    /// The substitution `r = (√2/h) sin u` removes the endpoint singularity;
    /// the remaining integral runs over `u = h w`, `w ∈ [0, π/(2h)]`.
    pub fn lambda_h(&self, h: f64, j: u32, k: u32) -> Result<f64> {
        check_bandwidth(h)?;
        check_power(k)?;
        let w_max = match self.support_bound {
            Some(b) if h * (0.5 * b).sqrt() < 1.0 => (h * (0.5 * b).sqrt()).asin() / h,
            _ => std::f64::consts::FRAC_PI_2 / h,
        };
        let breaks = dyadic_breakpoints(w_max);
        let jj = 2 * j as i32;
        let r = integrate(
            |w| {
                let rr = std::f64::consts::SQRT_2 * (h * w).sin() / h;
                self.value_pow(rr * rr, k) * rr.powi(jj)
            },
            0.0,
            w_max,
            &breaks,
            Tolerance::default(),
        );
        if !r.converged {
            return Err(Error::Integrability(format!("lambda_h did not converge (h = {h})")));
        }
        Ok(r.value)
    }

    /// `λ_{j,k}(L) = 2^{−1/2} a_{j,k}(L)`, the small-bandwidth limit of `λ_{h,j,k}`.
    pub fn lambda_limit(&self, j: u32, k: u32) -> Result<f64> {
        Ok(std::f64::consts::FRAC_1_SQRT_2 * self.moment_a(j, k)?.value)
    }
}

/// Breakpoints 1, 2, 4, ... strictly inside `(0, end)`.
fn dyadic_breakpoints(end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut p = 1.0;
    while p < end {
        out.push(p);
        p *= 2.0;
    }
    out
}
