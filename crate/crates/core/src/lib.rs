//! Directional kernel smoothing on the circle: kernel constants, density
//! estimation, and local constant / local linear Fréchet regression for
//! metric-space-valued responses with circular predictors.

// `!(x > 0.0)` is used on purpose so that NaN lands in the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandwidth;
pub mod circle;
pub mod error;
pub mod frechet_lc;
pub mod frechet_ll;
pub mod harness;
pub mod io;
pub mod kde;
pub mod kernel;
pub mod metric;
pub mod model;
pub mod numeric;
pub mod quadrature;

pub use circle::{Angle, CircularSample, UnitVector2};
pub use error::{Error, Result};
pub use frechet_lc::PairedSample;
pub use kernel::{DirectionalKernel, KernelFamily};
pub use metric::{FrechetEstimate, MetricSpace, ResponsePoint};
pub use model::{DensityModel, RegressionModel};
