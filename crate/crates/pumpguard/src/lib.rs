//! Acoustic intrusion detection for a two-container water process: scenario
//! files, audio and CSV formats, and the train/detect pipeline.

pub mod cli;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::Scenario;
