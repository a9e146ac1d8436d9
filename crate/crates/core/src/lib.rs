//! Certified robustness for split clipped-ReLU classifiers.
//!
//! The classifier is cut at a split index into a left half and a right half.
//! The left half gets a per-input local Lipschitz upper bound from interval
//! bound propagation and reduced-matrix spectral norms; the right half is
//! smoothed with Gaussian noise and certified by Monte-Carlo confidence
//! estimation. Combining the two yields a certified l2 radius of
//! `max over gamma of min(rs_radius / lipschitz_bound(gamma), gamma)`.
//!
//! The crate is `no_std` + `alloc`: all float math goes through `libm`, so
//! results are bit-reproducible across platforms. IO, file formats and the
//! command-line front end live in the companion `splitz-cli` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod certify;
pub mod data;
pub mod lipschitz;
pub mod matrix;
pub mod network;
pub mod rng;
pub mod smoothing;
pub mod stats;
pub mod train;

pub use certify::{certify_splitz, GammaMode, GammaSearchConfig, Prediction, SplitzCertificate};
pub use data::Dataset;
pub use lipschitz::{global_lipschitz_bound, local_lipschitz_bound, LipschitzCertificate};
pub use matrix::Matrix;
pub use network::{AffineLayer, Network};
pub use rng::RngStream;
pub use smoothing::{certify_smoothing, smooth_predict, SmoothingCertificate};
pub use train::{train, TrainConfig, TrainReport};
