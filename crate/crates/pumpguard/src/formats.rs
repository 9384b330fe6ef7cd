//! On-disk formats: trace, label, alert and spectrum CSVs, PCM16 WAV and the
//! profile database.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use pumpguard_core::profiling::DB_VERSION;
use pumpguard_core::synth::LabelChange;
use pumpguard_core::{
    AcousticProfile, AcousticState, Alert, Band, FrameSpec, ProcessState, ProfileDb,
    SegmentLabel, SegmentationConfig, TelemetryFrame, Verdict, WindowKind,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 9] = [
    "t",
    "levelC1_true",
    "levelC2_true",
    "pump_true",
    "valve_true",
    "dry_true",
    "levelC1_rep",
    "levelC2_rep",
    "pump_rep",
];
pub const LABEL_HEADER: [&str; 2] = ["sample_index", "acoustic_state"];
pub const ALERT_HEADER: [&str; 6] = [
    "frame_index",
    "time_s",
    "label",
    "max_z",
    "offending_band_hz",
    "verdict",
];
pub const SPECTRUM_HEADER: [&str; 2] = ["freq_hz", "power"];

/// Full-scale value used for PCM16 conversion in both directions.
pub const PCM_SCALE: f64 = 32767.0;

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let found = rdr.headers().map_err(|e| csv_error(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::malformed(
            path,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::malformed(path, e)
    }
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::malformed(path, format!("line {line}: missing column `{name}`")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::malformed(path, format!("line {line}: bad `{name}` value `{raw}`")))
}

fn flag(path: &Path, rec: &csv::StringRecord, i: usize, name: &str) -> Result<bool> {
    match field::<u8>(path, rec, i, name)? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(Error::malformed(path, format!("`{name}` must be 0 or 1, found {v}"))),
    }
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_trace(path: &Path, trace: &[TelemetryFrame]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRACE_HEADER).map_err(|e| csv_error(path, e))?;
    for f in trace {
        let (s, r) = (&f.true_state, &f.reported);
        w.write_record([
            f.t.to_string().as_str(),
            &s.level_c1.to_string(),
            &s.level_c2.to_string(),
            bit(s.pump_on),
            bit(s.valve_open),
            bit(s.pump_dry),
            &r.level_c1.to_string(),
            &r.level_c2.to_string(),
            bit(r.pump_on),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a trace CSV. The file carries no reported valve or dry-running
/// flags, so those are read back as `false`.
pub fn read_trace(path: &Path) -> Result<Vec<TelemetryFrame>> {
    let mut rdr = csv_reader(path, &TRACE_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let t: f64 = field(path, &rec, 0, "t")?;
        out.push(TelemetryFrame {
            t,
            true_state: ProcessState {
                t,
                level_c1: field(path, &rec, 1, TRACE_HEADER[1])?,
                level_c2: field(path, &rec, 2, TRACE_HEADER[2])?,
                pump_on: flag(path, &rec, 3, TRACE_HEADER[3])?,
                valve_open: flag(path, &rec, 4, TRACE_HEADER[4])?,
                pump_dry: flag(path, &rec, 5, TRACE_HEADER[5])?,
            },
            reported: ProcessState {
                t,
                level_c1: field(path, &rec, 6, TRACE_HEADER[6])?,
                level_c2: field(path, &rec, 7, TRACE_HEADER[7])?,
                pump_on: flag(path, &rec, 8, TRACE_HEADER[8])?,
                valve_open: false,
                pump_dry: false,
            },
        });
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[LabelChange]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(LABEL_HEADER).map_err(|e| csv_error(path, e))?;
    for c in labels {
        w.write_record([c.sample.to_string().as_str(), c.state.name()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelChange>> {
    let mut rdr = csv_reader(path, &LABEL_HEADER)?;
    let mut out: Vec<LabelChange> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let sample: u64 = field(path, &rec, 0, LABEL_HEADER[0])?;
        let name: String = field(path, &rec, 1, LABEL_HEADER[1])?;
        let state = AcousticState::from_name(&name)
            .ok_or_else(|| Error::malformed(path, format!("unknown acoustic state `{name}`")))?;
        if out.last().is_some_and(|c| c.sample >= sample) || (out.is_empty() && sample != 0) {
            return Err(Error::malformed(
                path,
                "label rows must start at sample 0 and increase",
            ));
        }
        out.push(LabelChange { sample, state });
    }
    if out.is_empty() {
        return Err(Error::malformed(path, "no label rows"));
    }
    Ok(out)
}

pub fn write_alerts(path: &Path, alerts: &[Alert]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(ALERT_HEADER).map_err(|e| csv_error(path, e))?;
    for a in alerts {
        w.write_record([
            a.frame_index.to_string().as_str(),
            &a.time_s.to_string(),
            a.label.name(),
            &a.max_z.to_string(),
            &a.offending_band_hz.to_string(),
            a.verdict.name(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_alerts(path: &Path) -> Result<Vec<Alert>> {
    let mut rdr = csv_reader(path, &ALERT_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let label: String = field(path, &rec, 2, "label")?;
        let verdict: String = field(path, &rec, 5, "verdict")?;
        out.push(Alert {
            frame_index: field(path, &rec, 0, "frame_index")?,
            time_s: field(path, &rec, 1, "time_s")?,
            label: SegmentLabel::from_name(&label)
                .ok_or_else(|| Error::malformed(path, format!("unknown label `{label}`")))?,
            max_z: field(path, &rec, 3, "max_z")?,
            offending_band_hz: field(path, &rec, 4, "offending_band_hz")?,
            verdict: Verdict::from_name(&verdict)
                .ok_or_else(|| Error::malformed(path, format!("unknown verdict `{verdict}`")))?,
        });
    }
    Ok(out)
}

pub fn write_spectrum(path: &Path, freqs: &[f64], power_db: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SPECTRUM_HEADER).map_err(|e| csv_error(path, e))?;
    for (f, p) in freqs.iter().zip(power_db) {
        w.write_record([f.to_string(), p.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_spectrum(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv_reader(path, &SPECTRUM_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            Ok((field(path, &rec, 0, "freq_hz")?, field(path, &rec, 1, "power")?))
        })
        .collect()
}

pub fn to_pcm(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * PCM_SCALE).round() as i16
}

pub fn from_pcm(v: i16) -> f64 {
    v as f64 / PCM_SCALE
}

/// Integer sample rate for the WAV header.
pub fn wav_rate(sample_rate: f64) -> Result<u32> {
    if sample_rate.fract() == 0.0 && sample_rate > 0.0 && sample_rate <= u32::MAX as f64 {
        Ok(sample_rate as u32)
    } else {
        Err(Error::config("synth.sample_rate", "must be a whole number of Hz"))
    }
}

/// Streaming PCM16 mono writer.
pub struct WavSink {
    writer: hound::WavWriter<BufWriter<File>>,
    path: std::path::PathBuf,
}

impl WavSink {
    pub fn create(path: &Path, sample_rate: u32) -> Result<WavSink> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
        Ok(WavSink {
            writer,
            path: path.to_path_buf(),
        })
    }

    pub fn write(&mut self, samples: &[i16]) -> Result<()> {
        let mut w = self.writer.get_i16_writer(samples.len() as u32);
        for &s in samples {
            w.write_sample(s);
        }
        w.flush().map_err(|e| wav_error(&self.path, e))
    }

    pub fn finish(self) -> Result<()> {
        self.writer.finalize().map_err(|e| wav_error(&self.path, e))
    }
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::malformed(path, other),
    }
}

pub fn write_wav(path: &Path, sample_rate: u32, samples: &[i16]) -> Result<()> {
    let mut sink = WavSink::create(path, sample_rate)?;
    sink.write(samples)?;
    sink.finish()
}

/// PCM16 mono audio loaded from a WAV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Pcm {
    pub sample_rate: u32,
    pub samples: Vec<i16>,
}

pub fn read_wav(path: &Path) -> Result<Pcm> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = hound::WavReader::new(BufReader::new(file)).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let unsupported = |detail: String| Error::UnsupportedWav {
        path: path.to_path_buf(),
        detail,
    };
    if spec.channels != 1 {
        return Err(unsupported(format!("{} channels", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(unsupported(format!(
            "{} bits {:?}",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| wav_error(path, e))?;
    Ok(Pcm {
        sample_rate: spec.sample_rate,
        samples,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DbDoc {
    version: u32,
    sample_rate: f64,
    frame_len: usize,
    hop: usize,
    window: String,
    bands: Vec<BandDoc>,
    segmentation: SegmentationDoc,
    profiles: ProfilesDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandDoc {
    center_hz: f64,
    half_width_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentationDoc {
    on_threshold: f64,
    off_threshold: f64,
    min_segment_frames: usize,
    activity_low_hz: f64,
    activity_high_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfilesDoc {
    active: ProfileDoc,
    inactive: ProfileDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    mean_db: Vec<f64>,
    std_db: Vec<f64>,
    ratio4k: f64,
    ratio5k: f64,
    frames: usize,
}

impl ProfileDoc {
    fn from_profile(p: &AcousticProfile) -> Self {
        ProfileDoc {
            mean_db: p.mean_db.clone(),
            std_db: p.std_db.clone(),
            ratio4k: p.mean_ratio_4k,
            ratio5k: p.mean_ratio_5k,
            frames: p.frames,
        }
    }

    fn into_profile(self, label: SegmentLabel, n_bands: usize, path: &Path) -> Result<AcousticProfile> {
        if self.mean_db.len() != n_bands || self.std_db.len() != n_bands {
            return Err(Error::malformed(
                path,
                format!("profile `{label}` does not have one entry per band ({n_bands})"),
            ));
        }
        if !self.std_db.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::malformed(path, format!("profile `{label}` has a non-positive std_db")));
        }
        Ok(AcousticProfile {
            label,
            mean_db: self.mean_db,
            std_db: self.std_db,
            mean_ratio_4k: self.ratio4k,
            mean_ratio_5k: self.ratio5k,
            frames: self.frames,
        })
    }
}

pub fn db_to_json(db: &ProfileDb) -> String {
    let doc = DbDoc {
        version: db.version,
        sample_rate: db.sample_rate,
        frame_len: db.frame_spec.frame_len,
        hop: db.frame_spec.hop,
        window: db.frame_spec.window.name().to_string(),
        bands: db
            .bands
            .iter()
            .map(|b| BandDoc {
                center_hz: b.center_hz,
                half_width_hz: b.half_width_hz,
            })
            .collect(),
        segmentation: SegmentationDoc {
            on_threshold: db.segmentation.on_threshold,
            off_threshold: db.segmentation.off_threshold,
            min_segment_frames: db.segmentation.min_segment_frames,
            activity_low_hz: db.segmentation.activity_low_hz,
            activity_high_hz: db.segmentation.activity_high_hz,
        },
        profiles: ProfilesDoc {
            active: ProfileDoc::from_profile(&db.active),
            inactive: ProfileDoc::from_profile(&db.inactive),
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data");
    s.push('\n');
    s
}

pub fn db_from_json(text: &str, path: &Path) -> Result<ProfileDb> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::malformed(path, e))?;
    match value.get("version").map(|v| v.as_u64()) {
        None => return Err(Error::malformed(path, "missing field `version`")),
        Some(Some(v)) if v == DB_VERSION as u64 => {}
        Some(Some(v)) => {
            return Err(Error::DbVersion {
                path: path.to_path_buf(),
                found: v.min(u32::MAX as u64) as u32,
                expected: DB_VERSION,
            })
        }
        Some(None) => return Err(Error::malformed(path, "`version` must be an integer")),
    }
    let doc: DbDoc = serde_json::from_value(value).map_err(|e| Error::malformed(path, e))?;
    let window = WindowKind::from_name(&doc.window)
        .ok_or_else(|| Error::malformed(path, format!("unknown window `{}`", doc.window)))?;
    let frame_spec = FrameSpec {
        frame_len: doc.frame_len,
        hop: doc.hop,
        window,
    };
    frame_spec.validate().map_err(|e| Error::malformed(path, e))?;
    let bands: Vec<Band> = doc
        .bands
        .iter()
        .map(|b| Band::new(b.center_hz, b.half_width_hz))
        .collect();
    if bands.is_empty() {
        return Err(Error::malformed(path, "no bands"));
    }
    let s = doc.segmentation;
    let n = bands.len();
    Ok(ProfileDb {
        version: doc.version,
        frame_spec,
        sample_rate: doc.sample_rate,
        segmentation: SegmentationConfig {
            on_threshold: s.on_threshold,
            off_threshold: s.off_threshold,
            min_segment_frames: s.min_segment_frames,
            activity_low_hz: s.activity_low_hz,
            activity_high_hz: s.activity_high_hz,
        },
        active: doc.profiles.active.into_profile(SegmentLabel::Active, n, path)?,
        inactive: doc.profiles.inactive.into_profile(SegmentLabel::Inactive, n, path)?,
        bands,
    })
}

pub fn save_db(path: &Path, db: &ProfileDb) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(db_to_json(db).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn load_db(path: &Path) -> Result<ProfileDb> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    db_from_json(&text, path)
}
