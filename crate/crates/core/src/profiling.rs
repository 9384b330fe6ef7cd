//! Activity segmentation and the known-good profile database.
//!
//! Frames are split into pump-active and pump-inactive segments with a
//! two-threshold hysteresis on a per-frame activity level. The level is the
//! RMS of the frame restricted to the low band where the pump's motor tones
//! live, so broadband hydraulic noise does not read as pump activity.

use alloc::vec::Vec;
use core::fmt;

use crate::dsp::{Band, BandFeatures, FrameSpec, PowerSpectrum};

/// Current profile database format version.
pub const DB_VERSION: u32 = 1;
/// Lower bound on per-band standard deviations, in dB.
pub const STD_FLOOR_DB: f64 = 0.5;
/// Minimum number of training frames per label.
pub const MIN_TRAIN_FRAMES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SegmentLabel {
    Active,
    Inactive,
}

impl SegmentLabel {
    pub fn name(self) -> &'static str {
        match self {
            SegmentLabel::Active => "active",
            SegmentLabel::Inactive => "inactive",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "active" => Some(SegmentLabel::Active),
            "inactive" => Some(SegmentLabel::Inactive),
            _ => None,
        }
    }

    fn other(self) -> Self {
        match self {
            SegmentLabel::Active => SegmentLabel::Inactive,
            SegmentLabel::Inactive => SegmentLabel::Active,
        }
    }
}

impl fmt::Display for SegmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileError {
    EmptyInput,
    InvalidThresholds,
    /// Activity levels are not clearly bimodal, so no thresholds can be derived.
    Calibration,
    InsufficientFrames { label: SegmentLabel, frames: usize },
    LengthMismatch { features: usize, frames: usize },
    BandCount { expected: usize, found: usize },
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileError::EmptyInput => write!(f, "no frames to segment"),
            ProfileError::InvalidThresholds => {
                write!(f, "thresholds must satisfy on > off > 0 and min segment >= 1")
            }
            ProfileError::Calibration => write!(
                f,
                "activity levels do not separate into active and inactive clusters"
            ),
            ProfileError::InsufficientFrames { label, frames } => write!(
                f,
                "label `{label}` has {frames} training frames, need at least {MIN_TRAIN_FRAMES}"
            ),
            ProfileError::LengthMismatch { features, frames } => write!(
                f,
                "{features} feature frames but segments cover {frames} frames"
            ),
            ProfileError::BandCount { expected, found } => {
                write!(f, "expected {expected} bands per frame, found {found}")
            }
        }
    }
}

impl core::error::Error for ProfileError {}

/// `[start_frame, end_frame)` with one label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub label: SegmentLabel,
    pub start_frame: usize,
    pub end_frame: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end_frame - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.end_frame == self.start_frame
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    pub on_threshold: f64,
    pub off_threshold: f64,
    pub min_segment_frames: usize,
    /// Band used for the activity level, in Hz.
    pub activity_low_hz: f64,
    pub activity_high_hz: f64,
}

impl SegmentationConfig {
    pub const DEFAULT_MIN_SEGMENT_FRAMES: usize = 5;
    pub const DEFAULT_ACTIVITY_BAND: (f64, f64) = (0.0, 2000.0);

    pub fn new(on_threshold: f64, off_threshold: f64) -> Self {
        SegmentationConfig {
            on_threshold,
            off_threshold,
            min_segment_frames: Self::DEFAULT_MIN_SEGMENT_FRAMES,
            activity_low_hz: Self::DEFAULT_ACTIVITY_BAND.0,
            activity_high_hz: Self::DEFAULT_ACTIVITY_BAND.1,
        }
    }

    /// Activity level of one frame.
    pub fn level(&self, ps: &PowerSpectrum) -> f64 {
        ps.band_rms(self.activity_low_hz, self.activity_high_hz)
    }

    pub fn segment(&self, levels: &[f64]) -> Result<Vec<Segment>, ProfileError> {
        segment_activity(levels, self.on_threshold, self.off_threshold, self.min_segment_frames)
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Derive segmentation thresholds from unlabelled activity levels.
///
/// The log-levels are split into two clusters by minimising the within-class
/// sum of squares. With `g` the geometric mean of the two cluster medians the
/// thresholds are `on = 2 g` and `off = g / 2`; the clusters must be more than
/// a factor of 4 apart so that both thresholds fall between them.
pub fn calibrate_thresholds(levels: &[f64]) -> Result<(f64, f64), ProfileError> {
    if levels.len() < 2 {
        return Err(ProfileError::EmptyInput);
    }
    let mut logs: Vec<f64> = levels.iter().map(|v| libm::log(v.max(1e-12))).collect();
    logs.sort_by(f64::total_cmp);
    let n = logs.len();
    let mut prefix = Vec::with_capacity(n + 1);
    let mut prefix_sq = Vec::with_capacity(n + 1);
    let (mut s, mut s2) = (0.0, 0.0);
    prefix.push(0.0);
    prefix_sq.push(0.0);
    for v in &logs {
        s += v;
        s2 += v * v;
        prefix.push(s);
        prefix_sq.push(s2);
    }
    let sse = |a: usize, b: usize| {
        let m = (b - a) as f64;
        let sum = prefix[b] - prefix[a];
        (prefix_sq[b] - prefix_sq[a]) - sum * sum / m
    };
    let split = (1..n)
        .min_by(|&i, &j| (sse(0, i) + sse(i, n)).total_cmp(&(sse(0, j) + sse(j, n))))
        .expect("n >= 2");
    let low = libm::exp(median(&logs[..split]));
    let high = libm::exp(median(&logs[split..]));
    if !(high > 4.0 * low) {
        return Err(ProfileError::Calibration);
    }
    let g = libm::sqrt(low * high);
    Ok((2.0 * g, 0.5 * g))
}

/// Hysteresis segmentation of per-frame activity levels.
///
/// Starts inactive; switches to active when a level exceeds `on_threshold`
/// and back when one drops below `off_threshold`. Runs shorter than
/// `min_segment_frames` are absorbed by their predecessor (a short first run
/// by its successor), so segments always alternate and tile the input.
pub fn segment_activity(
    levels: &[f64],
    on_threshold: f64,
    off_threshold: f64,
    min_segment_frames: usize,
) -> Result<Vec<Segment>, ProfileError> {
    if levels.is_empty() {
        return Err(ProfileError::EmptyInput);
    }
    if !(off_threshold > 0.0 && on_threshold > off_threshold && min_segment_frames >= 1) {
        return Err(ProfileError::InvalidThresholds);
    }
    let mut label = SegmentLabel::Inactive;
    let mut runs: Vec<Segment> = Vec::new();
    for (i, &v) in levels.iter().enumerate() {
        label = match label {
            SegmentLabel::Inactive if v > on_threshold => SegmentLabel::Active,
            SegmentLabel::Active if v < off_threshold => SegmentLabel::Inactive,
            l => l,
        };
        match runs.last_mut() {
            Some(r) if r.label == label => r.end_frame = i + 1,
            _ => runs.push(Segment {
                label,
                start_frame: i,
                end_frame: i + 1,
            }),
        }
    }

    let mut out: Vec<Segment> = Vec::with_capacity(runs.len());
    for run in runs {
        match out.last_mut() {
            Some(prev) if run.len() < min_segment_frames || prev.label == run.label => {
                prev.end_frame = run.end_frame;
            }
            _ => out.push(run),
        }
    }
    if out.len() > 1 && out[0].len() < min_segment_frames {
        let first = out.remove(0);
        out[0].start_frame = first.start_frame;
        // The absorbed first run may now sit next to a segment of its own
        // label; merging keeps the alternation.
        if out.len() > 1 && out[0].label == out[1].label {
            let next = out.remove(1);
            out[0].end_frame = next.end_frame;
        }
    }
    debug_assert!(out.windows(2).all(|w| w[0].label == w[1].label.other()));
    Ok(out)
}

/// Expand segments into one label per frame.
pub fn frame_labels(segments: &[Segment]) -> Vec<SegmentLabel> {
    segments
        .iter()
        .flat_map(|s| core::iter::repeat_n(s.label, s.len()))
        .collect()
}

/// Statistical template of one operating state.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticProfile {
    pub label: SegmentLabel,
    pub mean_db: Vec<f64>,
    pub std_db: Vec<f64>,
    pub mean_ratio_4k: f64,
    pub mean_ratio_5k: f64,
    pub frames: usize,
}

/// Known-good profiles plus the analysis settings they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDb {
    pub version: u32,
    pub frame_spec: FrameSpec,
    pub sample_rate: f64,
    pub bands: Vec<Band>,
    pub segmentation: SegmentationConfig,
    pub active: AcousticProfile,
    pub inactive: AcousticProfile,
}

impl ProfileDb {
    pub fn profile(&self, label: SegmentLabel) -> &AcousticProfile {
        match label {
            SegmentLabel::Active => &self.active,
            SegmentLabel::Inactive => &self.inactive,
        }
    }
}

/// Analysis settings recorded alongside trained profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingContext {
    pub frame_spec: FrameSpec,
    pub sample_rate: f64,
    pub bands: Vec<Band>,
    pub segmentation: SegmentationConfig,
}

fn build_profile(
    label: SegmentLabel,
    frames: &[&BandFeatures],
    n_bands: usize,
) -> Result<AcousticProfile, ProfileError> {
    if frames.len() < MIN_TRAIN_FRAMES {
        return Err(ProfileError::InsufficientFrames {
            label,
            frames: frames.len(),
        });
    }
    let n = frames.len() as f64;
    let mut mean = alloc::vec![0.0; n_bands];
    for f in frames {
        for (m, v) in mean.iter_mut().zip(&f.log_band_energies) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = alloc::vec![0.0; n_bands];
    for f in frames {
        for ((s, v), m) in var.iter_mut().zip(&f.log_band_energies).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .iter()
        .map(|s| libm::sqrt(s / n).max(STD_FLOOR_DB))
        .collect();
    Ok(AcousticProfile {
        label,
        mean_db: mean,
        std_db: std,
        mean_ratio_4k: frames.iter().map(|f| f.high_band_ratio_4k).sum::<f64>() / n,
        mean_ratio_5k: frames.iter().map(|f| f.high_band_ratio_5k).sum::<f64>() / n,
        frames: frames.len(),
    })
}

/// Fit per-label mean and population standard deviation of the log band
/// energies. Training data is assumed attack-free.
pub fn train_profiles(
    features: &[BandFeatures],
    segments: &[Segment],
    ctx: TrainingContext,
) -> Result<ProfileDb, ProfileError> {
    let covered = segments.last().map_or(0, |s| s.end_frame);
    if covered != features.len() {
        return Err(ProfileError::LengthMismatch {
            features: features.len(),
            frames: covered,
        });
    }
    let n_bands = ctx.bands.len();
    if let Some(f) = features.iter().find(|f| f.log_band_energies.len() != n_bands) {
        return Err(ProfileError::BandCount {
            expected: n_bands,
            found: f.log_band_energies.len(),
        });
    }
    let collect = |label| -> Vec<&BandFeatures> {
        segments
            .iter()
            .filter(|s| s.label == label)
            .flat_map(|s| &features[s.start_frame..s.end_frame])
            .collect()
    };
    let active = build_profile(SegmentLabel::Active, &collect(SegmentLabel::Active), n_bands)?;
    let inactive = build_profile(SegmentLabel::Inactive, &collect(SegmentLabel::Inactive), n_bands)?;
    Ok(ProfileDb {
        version: DB_VERSION,
        frame_spec: ctx.frame_spec,
        sample_rate: ctx.sample_rate,
        bands: ctx.bands,
        segmentation: ctx.segmentation,
        active,
        inactive,
    })
}
