//! Scores frames against the profile of their segment label and raises one
//! alert per sustained deviation.

use alloc::vec::Vec;
use core::fmt;

use crate::dsp::{Band, BandFeatures, FrameSpec};
use crate::profiling::{AcousticProfile, ProfileDb, SegmentLabel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    pub z_threshold: f64,
    pub consecutive_frames: usize,
    pub ratio_margin: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            z_threshold: 3.0,
            consecutive_frames: 5,
            ratio_margin: 0.15,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.z_threshold > 0.0 && self.z_threshold.is_finite()) {
            return Err(DetectError::InvalidConfig("z_threshold must be > 0"));
        }
        if self.consecutive_frames == 0 {
            return Err(DetectError::InvalidConfig("consecutive must be >= 1"));
        }
        if !(self.ratio_margin > 0.0 && self.ratio_margin < 1.0) {
            return Err(DetectError::InvalidConfig("ratio_margin must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    /// Dry-running pump: elevated energy above 4 kHz while active.
    Attack1Suspected,
    /// Open release valve: elevated energy above 5 kHz while inactive.
    Attack2Suspected,
    UnknownAnomaly,
}

impl Verdict {
    pub const ALL: [Verdict; 3] = [
        Verdict::Attack1Suspected,
        Verdict::Attack2Suspected,
        Verdict::UnknownAnomaly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Attack1Suspected => "attack1_suspected",
            Verdict::Attack2Suspected => "attack2_suspected",
            Verdict::UnknownAnomaly => "unknown_anomaly",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Verdict::ALL.into_iter().find(|v| v.name() == name)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alert {
    pub frame_index: usize,
    pub time_s: f64,
    pub label: SegmentLabel,
    pub max_z: f64,
    pub offending_band_hz: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectError {
    InvalidConfig(&'static str),
    BandCount { expected: usize, found: usize },
    SampleRateMismatch { stream: f64, db: f64 },
    FrameSpecMismatch { stream: FrameSpec, db: FrameSpec },
    BandMismatch,
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectError::InvalidConfig(why) => write!(f, "invalid detection config: {why}"),
            DetectError::BandCount { expected, found } => {
                write!(f, "profile has {expected} bands, frame has {found}")
            }
            DetectError::SampleRateMismatch { stream, db } => write!(
                f,
                "stream sample rate {stream} Hz does not match profile database ({db} Hz)"
            ),
            DetectError::FrameSpecMismatch { stream, db } => write!(
                f,
                "stream frames ({}/{}/{}) do not match profile database ({}/{}/{})",
                stream.frame_len,
                stream.hop,
                stream.window.name(),
                db.frame_len,
                db.hop,
                db.window.name()
            ),
            DetectError::BandMismatch => write!(f, "stream bands differ from profile database"),
        }
    }
}

impl core::error::Error for DetectError {}

/// Signed per-band z-scores of `f` against `profile`.
pub fn score_frame(f: &BandFeatures, profile: &AcousticProfile) -> Result<Vec<f64>, DetectError> {
    if f.log_band_energies.len() != profile.mean_db.len() {
        return Err(DetectError::BandCount {
            expected: profile.mean_db.len(),
            found: f.log_band_energies.len(),
        });
    }
    Ok(f.log_band_energies
        .iter()
        .zip(&profile.mean_db)
        .zip(&profile.std_db)
        .map(|((x, m), s)| (x - m) / s)
        .collect())
}

/// Map an alert's context to the attack it most likely represents.
pub fn classify(
    label: SegmentLabel,
    mean_ratio_4k: f64,
    mean_ratio_5k: f64,
    normal: &AcousticProfile,
    cfg: &DetectionConfig,
) -> Verdict {
    match label {
        SegmentLabel::Active if mean_ratio_4k > normal.mean_ratio_4k + cfg.ratio_margin => {
            Verdict::Attack1Suspected
        }
        SegmentLabel::Inactive if mean_ratio_5k > normal.mean_ratio_5k + cfg.ratio_margin => {
            Verdict::Attack2Suspected
        }
        _ => Verdict::UnknownAnomaly,
    }
}

/// Features of one frame with the segment label it was assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub features: BandFeatures,
    pub label: SegmentLabel,
}

/// A feature stream and the analysis settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStream {
    pub sample_rate: f64,
    pub frame_spec: FrameSpec,
    pub bands: Vec<Band>,
    pub frames: Vec<LabeledFrame>,
}

impl FeatureStream {
    pub fn frame_time(&self, index: usize) -> f64 {
        self.frame_spec.frame_start(index) as f64 / self.sample_rate
    }
}

struct Exceedance {
    abs_z: Vec<f64>,
    max_z: f64,
}

/// Debounced detection. The `k`-th consecutive frame whose largest |z|
/// exceeds the threshold raises an alert (`k = consecutive_frames`); no further
/// alert is raised until that run of exceeding frames ends.
pub fn detect(
    stream: &FeatureStream,
    db: &ProfileDb,
    cfg: &DetectionConfig,
) -> Result<Vec<Alert>, DetectError> {
    cfg.validate()?;
    if stream.sample_rate != db.sample_rate {
        return Err(DetectError::SampleRateMismatch {
            stream: stream.sample_rate,
            db: db.sample_rate,
        });
    }
    if stream.frame_spec != db.frame_spec {
        return Err(DetectError::FrameSpecMismatch {
            stream: stream.frame_spec,
            db: db.frame_spec,
        });
    }
    if stream.bands != db.bands {
        return Err(DetectError::BandMismatch);
    }

    let k = cfg.consecutive_frames;
    let mut alerts = Vec::new();
    let mut run: Vec<Exceedance> = Vec::new();
    let mut alerted = false;
    for (i, frame) in stream.frames.iter().enumerate() {
        let z = score_frame(&frame.features, db.profile(frame.label))?;
        let abs_z: Vec<f64> = z.iter().map(|v| libm::fabs(*v)).collect();
        let max_z = abs_z.iter().copied().fold(0.0, f64::max);
        if max_z <= cfg.z_threshold {
            run.clear();
            alerted = false;
            continue;
        }
        run.push(Exceedance { abs_z, max_z });
        if alerted || run.len() < k {
            continue;
        }
        alerted = true;
        let window = &run[run.len() - k..];
        let trigger = &stream.frames[i + 1 - k..=i];
        let n_bands = db.bands.len();
        let mut mean_abs = alloc::vec![0.0; n_bands];
        for e in window {
            for (m, v) in mean_abs.iter_mut().zip(&e.abs_z) {
                *m += v / k as f64;
            }
        }
        let band = mean_abs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (b, v)| if *v > best.1 { (b, *v) } else { best })
            .0;
        let r4 = trigger.iter().map(|f| f.features.high_band_ratio_4k).sum::<f64>() / k as f64;
        let r5 = trigger.iter().map(|f| f.features.high_band_ratio_5k).sum::<f64>() / k as f64;
        let label = frame.label;
        alerts.push(Alert {
            frame_index: i,
            time_s: stream.frame_time(i),
            label,
            max_z: window.iter().map(|e| e.max_z).fold(0.0, f64::max),
            offending_band_hz: db.bands[band].center_hz,
            verdict: classify(label, r4, r5, db.profile(label), cfg),
        });
    }
    Ok(alerts)
}
