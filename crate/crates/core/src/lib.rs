//! Location-aware mmWave beam alignment.
//!
//! Building blocks for a link-level simulator in which a BS and a UE align
//! their ULA beams with the help of noisy node locations:
//!
//! - [`array_codebook`]: steering vectors, grid codebooks, nearest-beam
//!   quantization;
//! - [`geometry`]: scenarios, bounded location errors, angles and
//!   uncertainty half-angles;
//! - [`channel`]: multipath channel synthesis and rate evaluation;
//! - [`alignment`]: uncertainty-region beam subsets, search windows, the
//!   coordinated alignment protocol and its baselines;
//! - [`crb`]: Fisher information, CRB covariance, Jacobian propagation and
//!   estimation-error-aware rates.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`];
//! the `*64` aliases below pin everything to `f64`, which is what the CLI
//! harness uses.

pub mod alignment;
pub mod array_codebook;
pub mod channel;
pub mod crb;
mod error;
pub mod geometry;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SteeringVector64 = array_codebook::SteeringVector<f64>;
pub type Codebook64 = array_codebook::Codebook<f64>;

pub type Scenario64 = geometry::Scenario<f64>;
pub type LocationEstimate64 = geometry::LocationEstimate<f64>;

pub type ChannelParams64 = channel::ChannelParams<f64>;
pub type ChannelInstance64 = channel::ChannelInstance<f64>;
pub type BeamGainTable64 = channel::BeamGainTable<f64>;

pub type AlignmentConfig64 = alignment::AlignmentConfig<f64>;
pub type AlignmentOutcome64 = alignment::AlignmentOutcome<f64>;
pub type PathBeamSets64 = alignment::PathBeamSets<f64>;

pub type ParamVector64 = crb::ParamVector<f64>;
pub type MeasurementMatrix64 = crb::MeasurementMatrix<f64>;
pub type FisherInformation64 = crb::FisherInformation<f64>;
pub type ChannelErrorCovariance64 = crb::ChannelErrorCovariance<f64>;
