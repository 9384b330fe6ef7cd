//! Acoustic side-channel intrusion detection for a two-container pump process.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the algorithmic
//! parts of the workbench:
//!
//! - [`process`]: hysteresis-controlled two-tank simulation with attack
//!   injection and spoofed telemetry.
//! - [`synth`]: deterministic acoustic rendering of the process state.
//! - [`dsp`]: framing, windowing, FFT, power spectra and band features.
//! - [`profiling`]: activity segmentation and the known-good profile database.
//! - [`detector`]: z-score scoring, debounced alerting and attack verdicts.
//!
//! File formats, WAV handling and the command line live in the `pumpguard`
//! companion crate.

#![no_std]
// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod detector;
pub mod dsp;
pub mod process;
pub mod profiling;
pub mod rng;
pub mod synth;

pub use detector::{Alert, DetectionConfig, Verdict};
pub use dsp::{Band, BandFeatures, FrameSpec, PowerSpectrum, WindowKind};
pub use process::{AttackScript, ProcessParams, ProcessState, TelemetryFrame, Window};
pub use profiling::{AcousticProfile, ProfileDb, Segment, SegmentLabel, SegmentationConfig};
pub use synth::{AcousticState, SpectralEnvelope, SynthConfig};
