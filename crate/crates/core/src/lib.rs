//! Numerical free additive convolution of multi-cut Jacobi-type measures.
//!
//! The engine solves the subordination equations of the free additive
//! convolution `μ_α ⊞ μ_β` and of the semigroup `μ^{⊞t}`, reconstructs the
//! density and support of the result on the real line, and checks the
//! component-count bounds that the support must satisfy.
//!
//! Module map:
//! - [`measures`]: measure model, moments, quantiles.
//! - [`transform`]: Cauchy transform `m`, `F = -1/m`, `I_μ`, Nevanlinna data.
//! - [`subordination`]: pointwise solvers and the continuation ladder.
//! - [`spectral`]: density grids and support detection.
//! - [`analysis`]: gap zeros, P/N sets, semigroup edges, bound reports.
//! - [`rmt`]: random-matrix cross-checks.

pub mod analysis;
pub mod error;
pub mod measures;
pub mod quadrature;
pub mod rmt;
pub mod spectral;
pub mod subordination;
pub mod transform;

pub use error::{Error, Result};
pub use measures::{build_measure, MeasureSpec, MultiCutMeasure};
pub use num_complex::Complex64;
