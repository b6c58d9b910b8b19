//! Separation of a measured signal into a global periodic component and an
//! aperiodic piecewise-polynomial trend.
//!
//! The signal model is
//!
//! ```text
//! y ≈ B(ω) γ = [ B_p(x, ω, ν) | B_s(x, δ, κ) ] [ α ; β ]
//! ```
//!
//! where `B_p` holds `ν` sine/cosine pairs of the base frequency `ω` and `B_s`
//! holds the clamped B-spline basis of degree `δ` over the breakpoints `κ`.
//! The model is linear in `γ` and nonlinear only in `ω`, so the linear
//! coefficients are eliminated by projection and the fit reduces to a scalar
//! minimization of
//!
//! ```text
//! E(ω) = ‖ y − B(ω) B⁺(ω) y ‖²
//! ```
//!
//! followed by a linear solve and covariance propagation at the optimum.
//!
//! ```
//! use varpro_trend::analysis::{generate_synthetic, SyntheticSpec};
//! use varpro_trend::optimizer::{fit, FitConfig};
//!
//! let spec = SyntheticSpec::paper_preset(7);
//! let data = generate_synthetic(&spec).unwrap();
//! let config = FitConfig::new(spec.spline.clone(), spec.harmonic_amplitudes.len());
//! let result = fit(&data.x, &data.y, &config).unwrap();
//! assert!((result.omega_hat - 36.96).abs() < 0.1);
//! ```

// negated comparisons double as NaN checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
mod dft;
mod error;
pub mod optimizer;
pub mod varpro;

pub use error::{Error, Result, Stage};
