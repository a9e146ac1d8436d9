//! Test-only reference implementations used as independent oracles.
//!
//! Everything in this crate is deliberately written from first principles
//! (Taylor series, continued fractions, direct summation, plain gradient
//! descent) so that it shares no code with the numerical paths it is used
//! to check. It is a dev-dependency only and never ships.

pub mod erf;
pub mod logistic;
pub mod mlp;

pub use erf::{binomial_tail_direct, erf_oracle, erfc_oracle, normal_cdf_oracle, phi_inverse_oracle};
