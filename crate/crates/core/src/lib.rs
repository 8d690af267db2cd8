//! Spatial envelope analysis of radiated power for active antenna arrays.
//!
//! The crate computes the deterministic angular upper bound of radiated
//! power for beamformed arrays in the signal, third-order intermodulation
//! and noise regimes, and cross-checks the analytic envelopes against an
//! independent waveform-level far-field simulation.
//!
//! Modules:
//! - [`pattern`]: parametric radiation pattern of the elementary radiator
//! - [`geometry`]: array factors and steering for two-element and M×N grids
//! - [`waveform`]: baseband signal generation, PA nonlinearity, IM3 decomposition
//! - [`spectral`]: Welch PSD estimation, band integration, region classification
//! - [`envelope`]: analytic directional EIRP and spatial envelopes per regime
//! - [`oracle`]: waveform-level far-field sweep simulator
//!
//! All numeric code is generic over the [`Scalar`] sample type; the `*64`
//! aliases below pin the common `f64` instantiations.

pub mod envelope;
pub mod geometry;
pub mod oracle;
pub mod pattern;
pub mod scalar;
pub mod spectral;
pub mod units;
pub mod waveform;

pub use scalar::{FftScalar, Scalar};

/// `f64` element pattern parameters.
pub type ElementPattern64 = pattern::ElementPatternParams<f64>;
/// `f64` two-element array.
pub type TwoElementArray64 = geometry::TwoElementArray<f64>;
/// `f64` M×N array geometry.
pub type ArrayGeometry64 = geometry::ArrayGeometry<f64>;
/// `f64` steering configuration.
pub type SteeringConfig64 = geometry::SteeringConfig<f64>;
/// `f64` PA model.
pub type PaModel64 = waveform::PaModel<f64>;
/// `f64` user signal.
pub type UserSignal64 = waveform::UserSignal<f64>;
/// `f64` spectrum.
pub type Spectrum64 = spectral::Spectrum<f64>;
/// `f64` band definition.
pub type BandDefinition64 = spectral::BandDefinition<f64>;
/// `f64` regime powers.
pub type RegimePowers64 = envelope::RegimePowers<f64>;
/// `f64` angular cut.
pub type AngularCut64 = envelope::AngularCut<f64>;
/// `f64` uncertainty margins.
pub type UncertaintyMargins64 = envelope::UncertaintyMargins<f64>;
/// `f64` far-field scenario.
pub type FarFieldScenario64 = oracle::FarFieldScenario<f64>;
/// `f64` sweep result.
pub type SweepResult64 = oracle::SweepResult<f64>;
