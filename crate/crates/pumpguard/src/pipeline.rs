//! Rendering, frame analysis, training and detection over PCM16 audio.

use pumpguard_core::dsp::{features, to_db, SpectrumAnalyzer};
use pumpguard_core::profiling::{calibrate_thresholds, TrainingContext};
use pumpguard_core::synth::{LabelChange, Synth, Timeline};
use pumpguard_core::{
    detector, profiling, AcousticState, Alert, Band, BandFeatures, DetectionConfig, FrameSpec,
    PowerSpectrum, ProfileDb, Segment, SegmentationConfig, SynthConfig, TelemetryFrame,
};
use pumpguard_core::detector::{FeatureStream, LabeledFrame};

use crate::error::{Error, Result};
use crate::formats::{from_pcm, to_pcm, wav_rate, Pcm};

/// Samples rendered per call to the synthesiser.
const RENDER_CHUNK: usize = 1 << 16;

/// Rendered PCM audio and its ground-truth state changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub pcm: Pcm,
    pub labels: Vec<LabelChange>,
}

pub fn render(trace: &[TelemetryFrame], config: &SynthConfig) -> Result<Rendered> {
    let sample_rate = wav_rate(config.sample_rate)?;
    let synth = Synth::new(config.clone())?;
    let timeline = Timeline::from_trace(trace, config.sample_rate, config.ramp_samples())?;
    let len = timeline.len() as usize;
    let mut samples = Vec::with_capacity(len);
    let mut buf = vec![0.0; RENDER_CHUNK];
    let mut start = 0;
    while start < len {
        let n = RENDER_CHUNK.min(len - start);
        synth.render(&timeline, start as u64, &mut buf[..n])?;
        samples.extend(buf[..n].iter().map(|&x| to_pcm(x)));
        start += n;
    }
    Ok(Rendered {
        pcm: Pcm {
            sample_rate,
            samples,
        },
        labels: timeline.changes().to_vec(),
    })
}

/// Per-frame activity levels and band features of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub sample_rate: f64,
    pub frame_spec: FrameSpec,
    pub bands: Vec<Band>,
    pub levels: Vec<f64>,
    pub features: Vec<BandFeatures>,
}

pub fn analyze(
    pcm: &Pcm,
    frame_spec: FrameSpec,
    bands: &[Band],
    activity_band: (f64, f64),
) -> Result<Analysis> {
    let sample_rate = pcm.sample_rate as f64;
    let mut analyzer = SpectrumAnalyzer::new(frame_spec, sample_rate)?;
    let count = frame_spec.frame_count(pcm.samples.len());
    if count == 0 {
        return Err(pumpguard_core::dsp::DspError::TooShort {
            len: pcm.samples.len(),
            frame_len: frame_spec.frame_len,
        }
        .into());
    }
    let mut frame = vec![0.0; frame_spec.frame_len];
    let mut levels = Vec::with_capacity(count);
    let mut feats = Vec::with_capacity(count);
    for i in 0..count {
        let start = frame_spec.frame_start(i);
        for (dst, &s) in frame.iter_mut().zip(&pcm.samples[start..start + frame_spec.frame_len]) {
            *dst = from_pcm(s);
        }
        let ps = analyzer.analyze(&frame, start)?;
        levels.push(ps.band_rms(activity_band.0, activity_band.1));
        feats.push(features(&ps, bands)?);
    }
    Ok(Analysis {
        sample_rate,
        frame_spec,
        bands: bands.to_vec(),
        levels,
        features: feats,
    })
}

/// A trained database and the segmentation of the training audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub db: ProfileDb,
    pub segments: Vec<Segment>,
}

/// Calibrate segmentation on the recording itself, segment it and fit
/// per-label profiles.
pub fn train(pcm: &Pcm, frame_spec: FrameSpec, bands: &[Band]) -> Result<Training> {
    let activity = SegmentationConfig::DEFAULT_ACTIVITY_BAND;
    let analysis = analyze(pcm, frame_spec, bands, activity)?;
    let (on, off) = calibrate_thresholds(&analysis.levels)?;
    let segmentation = SegmentationConfig::new(on, off);
    let segments = segmentation.segment(&analysis.levels)?;
    let db = profiling::train_profiles(
        &analysis.features,
        &segments,
        TrainingContext {
            frame_spec,
            sample_rate: analysis.sample_rate,
            bands: bands.to_vec(),
            segmentation,
        },
    )?;
    Ok(Training { db, segments })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub segments: Vec<Segment>,
    pub alerts: Vec<Alert>,
    pub frames: usize,
}

/// Segment a recording with the database's thresholds and run the detector.
pub fn detect(pcm: &Pcm, db: &ProfileDb, cfg: &DetectionConfig) -> Result<Detection> {
    if pcm.sample_rate as f64 != db.sample_rate {
        return Err(Error::Mismatch(format!(
            "recording is {} Hz but the profile database was trained at {} Hz",
            pcm.sample_rate, db.sample_rate
        )));
    }
    let seg = &db.segmentation;
    let analysis = analyze(pcm, db.frame_spec, &db.bands, (seg.activity_low_hz, seg.activity_high_hz))?;
    let segments = seg.segment(&analysis.levels)?;
    detect_analysis(analysis, segments, db, cfg)
}

/// Run the detector on an existing analysis, e.g. to sweep thresholds
/// without re-reading the audio.
pub fn detect_analysis(
    analysis: Analysis,
    segments: Vec<Segment>,
    db: &ProfileDb,
    cfg: &DetectionConfig,
) -> Result<Detection> {
    let labels = profiling::frame_labels(&segments);
    let frames = analysis.features.len();
    let stream = FeatureStream {
        sample_rate: analysis.sample_rate,
        frame_spec: analysis.frame_spec,
        bands: analysis.bands,
        frames: analysis
            .features
            .into_iter()
            .zip(labels)
            .map(|(features, label)| LabeledFrame { features, label })
            .collect(),
    };
    let alerts = detector::detect(&stream, db, cfg)?;
    Ok(Detection {
        segments,
        alerts,
        frames,
    })
}

/// Averaged log power spectrum of the frames lying entirely in one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpectrum {
    pub state: AcousticState,
    pub frames: usize,
    pub freqs: Vec<f64>,
    pub power_db: Vec<f64>,
}

impl ClassSpectrum {
    /// Mean of `power_db` over bins with frequency in `[low, high]`.
    pub fn mean_between(&self, low: f64, high: f64) -> f64 {
        let (sum, n) = self
            .freqs
            .iter()
            .zip(&self.power_db)
            .filter(|(f, _)| **f >= low && **f <= high)
            .fold((0.0, 0usize), |(s, n), (_, p)| (s + p, n + 1));
        sum / n as f64
    }
}

/// Spectra per acoustic state present in `labels`, in [`AcousticState::ALL`]
/// order. Frames that straddle a state change are skipped.
pub fn class_spectra(pcm: &Pcm, labels: &[LabelChange], frame_spec: FrameSpec) -> Result<Vec<ClassSpectrum>> {
    let sample_rate = pcm.sample_rate as f64;
    let mut analyzer = SpectrumAnalyzer::new(frame_spec, sample_rate)?;
    let len = frame_spec.frame_len;
    let half = len / 2 + 1;
    let mut sums = vec![vec![0.0; half]; AcousticState::ALL.len()];
    let mut counts = [0usize; 4];
    let mut frame = vec![0.0; len];
    let mut seg = 0;
    for i in 0..frame_spec.frame_count(pcm.samples.len()) {
        let start = frame_spec.frame_start(i);
        while seg + 1 < labels.len() && labels[seg + 1].sample as usize <= start {
            seg += 1;
        }
        let seg_end = labels.get(seg + 1).map_or(usize::MAX, |c| c.sample as usize);
        if start + len > seg_end || (labels[seg].sample as usize) > start {
            continue;
        }
        for (dst, &s) in frame.iter_mut().zip(&pcm.samples[start..start + len]) {
            *dst = from_pcm(s);
        }
        let ps = analyzer.analyze(&frame, start)?;
        let k = labels[seg].state.index();
        for (acc, p) in sums[k].iter_mut().zip(&ps.bins) {
            *acc += to_db(*p);
        }
        counts[k] += 1;
    }
    Ok(AcousticState::ALL
        .iter()
        .filter(|s| counts[s.index()] > 0)
        .map(|&state| {
            let n = counts[state.index()] as f64;
            ClassSpectrum {
                state,
                frames: counts[state.index()],
                freqs: (0..half).map(|k| k as f64 * sample_rate / len as f64).collect(),
                power_db: sums[state.index()].iter().map(|s| s / n).collect(),
            }
        })
        .collect())
}

/// Linear power spectrum of frame `index`.
pub fn frame_spectrum(pcm: &Pcm, frame_spec: FrameSpec, index: usize) -> Result<PowerSpectrum> {
    let count = frame_spec.frame_count(pcm.samples.len());
    if index >= count {
        return Err(Error::config("--frame", format!("recording has {count} frames")));
    }
    let mut analyzer = SpectrumAnalyzer::new(frame_spec, pcm.sample_rate as f64)?;
    let start = frame_spec.frame_start(index);
    let frame: Vec<f64> = pcm.samples[start..start + frame_spec.frame_len]
        .iter()
        .map(|&s| from_pcm(s))
        .collect();
    Ok(analyzer.analyze(&frame, start)?)
}

/// Acoustic state of each frame's centre sample.
pub fn frame_truth(labels: &[LabelChange], frame_spec: FrameSpec, frames: usize) -> Vec<AcousticState> {
    let mut seg = 0;
    (0..frames)
        .map(|i| {
            let centre = (frame_spec.frame_start(i) + frame_spec.frame_len / 2) as u64;
            while seg + 1 < labels.len() && labels[seg + 1].sample <= centre {
                seg += 1;
            }
            labels[seg].state
        })
        .collect()
}
