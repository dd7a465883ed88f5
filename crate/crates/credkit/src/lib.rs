//! Earthquake signal detection toolkit.
//!
//! credkit bundles everything needed to run a convolutional-recurrent
//! earthquake detector on three-component seismograms at desk scale:
//!
//! - [`waveio`]: waveform/catalog CSV formats and window segmentation
//! - [`dsp`]: band-pass filtering, resampling, spectrograms, frame labels
//! - [`synth`]: synthetic scenes (event inserts, Ricker fakes, calibrated noise)
//! - [`nn`]: a small from-scratch neural network engine with handwritten
//!   backward passes and finite-difference gradient checking
//! - [`cred`]: the detector model itself (conv stages + residual bi-LSTMs),
//!   training loop, and model file serialization
//! - [`detectors`]: STA/LTA and template-matching baselines plus threshold
//!   extraction of detections from probability streams
//! - [`eval`]: precision/recall/F-score, PR sweeps, catalog matching, the
//!   SNR sensitivity benchmark, and SVG chart rendering
//!
//! Every seeded entry point is deterministic: the same seed produces
//! bit-identical waveforms, models, and output files.

pub mod cli;
pub mod cred;
pub mod detectors;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod nn;
pub mod rng;
pub mod synth;
pub mod waveio;

pub use error::{CredError, Result};
