//! Online spike sorting with a two-layer spiking sparse-coding network.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! * [`signal`] — band-pass filtering, MAD thresholding, spike detection and
//!   waveform extraction from multichannel recordings.
//! * [`lca`] — a Locally Competitive Algorithm layer with leaky-integrator
//!   dynamics, lateral inhibition, and graded-spike (TDQ), LIF, or continuous
//!   output neurons.
//! * [`learn`] — online batched dictionary learning with a two-phase
//!   learning-rate / step-count schedule.
//! * [`network`] — the two-layer sorter itself: feature layer feeding a
//!   clustering layer, argmax labeling, online layer-by-layer training.
//! * [`synth`] — seeded synthetic tetrode recordings with ground truth,
//!   controllable SNR, overlaps, and optional electrode drift.
//! * [`eval`] — agreement scoring, unit matching, F1 / precision metrics,
//!   and emission sparsity statistics.
//! * [`baseline`] — a PCA + k-means reference sorter sharing the same
//!   input/output conventions.
//! * [`io`] — file formats: raw recordings with JSON sidecars, spike-train
//!   and label CSVs, dictionary and model persistence.
//! * [`pipeline`] — end-to-end orchestration used by the CLI and tests.
//!
//! All numeric code is generic over a floating-point [`Scalar`] (`f32` or
//! `f64`); the aliases below fix the default `f64` instantiations.

pub mod baseline;
pub mod error;
pub mod eval;
pub mod io;
pub mod lca;
pub mod learn;
pub mod network;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default-precision multichannel recording.
pub type Recording = signal::Recording<f64>;
/// Default-precision detected spike waveform.
pub type SpikeWaveform = signal::SpikeWaveform<f64>;
/// Default-precision dictionary (one LCA layer's feedforward weights).
pub type Dictionary = lca::Dictionary<f64>;
/// Default-precision LCA layer.
pub type LcaLayer = lca::LcaLayer<f64>;
/// Default-precision two-layer sorter model.
pub type NssModel = network::NssModel<f64>;
/// Default-precision synthetic ground truth.
pub type GroundTruth = synth::GroundTruth<f64>;
