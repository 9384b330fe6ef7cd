//! Acoustic rendering of the pump process.
//!
//! Each acoustic state has a spectral envelope made of sinusoidal partials
//! and flat noise bands. Partials use an oscillator re-anchored to the exact
//! phase every [`OSC_ANCHOR`] samples; noise is synthesised in the frequency
//! domain in blocks of [`NOISE_BLOCK`] samples with random bin values keyed by
//! `(seed, block, bin)` and overlap-added under a sine window. Every output
//! sample is therefore a pure function of the seed, the state timeline and its
//! absolute index: any sample range can be rendered on its own and matches
//! a sequential render bit for bit.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use num_complex::Complex64;

use crate::dsp::FftPlan;
use crate::process::{ProcessState, TelemetryFrame};
use crate::rng;

/// Length of one noise synthesis block, in samples.
pub const NOISE_BLOCK: usize = 4096;
/// Oscillators are re-anchored to the exact phase at multiples of this index.
pub const OSC_ANCHOR: u64 = 1024;
/// Raw amplitudes above this indicate a misconfigured envelope.
pub const CLIP_LIMIT: f64 = 10.0;
/// Headroom, in noise standard deviations, reserved when choosing the gain.
const NOISE_CREST: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AcousticState {
    PumpActiveNormal,
    PumpInactiveNormal,
    PumpActiveDry,
    PumpInactiveReflow,
}

impl AcousticState {
    pub const ALL: [AcousticState; 4] = [
        AcousticState::PumpActiveNormal,
        AcousticState::PumpInactiveNormal,
        AcousticState::PumpActiveDry,
        AcousticState::PumpInactiveReflow,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            AcousticState::PumpActiveNormal => "pump_active_normal",
            AcousticState::PumpInactiveNormal => "pump_inactive_normal",
            AcousticState::PumpActiveDry => "pump_active_dry",
            AcousticState::PumpInactiveReflow => "pump_inactive_reflow",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        AcousticState::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn pump_active(self) -> bool {
        matches!(self, AcousticState::PumpActiveNormal | AcousticState::PumpActiveDry)
    }

    pub fn is_attack(self) -> bool {
        matches!(self, AcousticState::PumpActiveDry | AcousticState::PumpInactiveReflow)
    }
}

impl fmt::Display for AcousticState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn acoustic_state_of(state: &ProcessState) -> AcousticState {
    if state.pump_dry {
        AcousticState::PumpActiveDry
    } else if state.pump_on {
        AcousticState::PumpActiveNormal
    } else if state.valve_open {
        AcousticState::PumpInactiveReflow
    } else {
        AcousticState::PumpInactiveNormal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    InvalidConfig(&'static str),
    InvalidEnvelope {
        state: AcousticState,
        why: &'static str,
    },
    Clipping {
        sample: u64,
        peak: f64,
    },
    EmptyTrace,
    UnorderedTrace {
        tick: usize,
    },
    OutOfRange {
        end: u64,
        len: u64,
    },
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidConfig(why) => write!(f, "invalid synth config: {why}"),
            SynthError::InvalidEnvelope { state, why } => {
                write!(f, "invalid envelope for {state}: {why}")
            }
            SynthError::Clipping { sample, peak } => write!(
                f,
                "raw amplitude {peak} at sample {sample} exceeds {CLIP_LIMIT}; envelope misconfigured"
            ),
            SynthError::EmptyTrace => write!(f, "trace is empty"),
            SynthError::UnorderedTrace { tick } => write!(f, "trace time not increasing at tick {tick}"),
            SynthError::OutOfRange { end, len } => {
                write!(f, "render range ends at {end} but timeline has {len} samples")
            }
        }
    }
}

impl core::error::Error for SynthError {}

/// A sinusoid with peak amplitude `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partial {
    pub freq_hz: f64,
    pub amplitude: f64,
}

/// Flat noise over `[low_hz, high_hz)`. `level` is an amplitude spectral
/// density in units of 1/sqrt(kHz): the band contributes a variance of
/// `level^2 * width_kHz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBand {
    pub low_hz: f64,
    pub high_hz: f64,
    pub level: f64,
}

impl NoiseBand {
    pub fn new(low_hz: f64, high_hz: f64, level: f64) -> Self {
        NoiseBand {
            low_hz,
            high_hz,
            level,
        }
    }

    pub fn rms(&self) -> f64 {
        self.level * libm::sqrt((self.high_hz - self.low_hz) / 1000.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralEnvelope {
    pub partials: Vec<Partial>,
    pub noise: Vec<NoiseBand>,
}

impl SpectralEnvelope {
    fn validate(&self, state: AcousticState, sample_rate: f64) -> Result<(), SynthError> {
        let nyquist = sample_rate / 2.0;
        let bad = |why| Err(SynthError::InvalidEnvelope { state, why });
        for p in &self.partials {
            if !(p.freq_hz > 0.0 && p.freq_hz < nyquist) {
                return bad("partial frequency outside (0, Nyquist)");
            }
            if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
                return bad("partial amplitude must be finite and >= 0");
            }
        }
        let mut bands = self.noise.clone();
        bands.sort_by(|a, b| a.low_hz.total_cmp(&b.low_hz));
        for b in &bands {
            if !(b.low_hz >= 0.0 && b.low_hz < b.high_hz && b.high_hz <= nyquist) {
                return bad("noise band must satisfy 0 <= low < high <= Nyquist");
            }
            if !(b.level >= 0.0 && b.level.is_finite()) {
                return bad("noise level must be finite and >= 0");
            }
        }
        if bands.windows(2).any(|w| w[1].low_hz < w[0].high_hz) {
            return bad("noise bands overlap");
        }
        Ok(())
    }

    /// Adds `extra` on top of the existing noise floor. Where bands overlap
    /// their power densities add, and the result is re-split into
    /// non-overlapping bands.
    pub fn with_layer(&self, extra: NoiseBand) -> SpectralEnvelope {
        let mut edges: Vec<f64> = self
            .noise
            .iter()
            .flat_map(|b| [b.low_hz, b.high_hz])
            .chain([extra.low_hz, extra.high_hz])
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let all: Vec<NoiseBand> = self.noise.iter().copied().chain([extra]).collect();
        let noise = edges
            .windows(2)
            .filter_map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let power: f64 = all
                    .iter()
                    .filter(|b| b.low_hz <= mid && mid < b.high_hz)
                    .map(|b| b.level * b.level)
                    .sum();
                (power > 0.0).then(|| NoiseBand::new(w[0], w[1], libm::sqrt(power)))
            })
            .collect();
        SpectralEnvelope {
            partials: self.partials.clone(),
            noise,
        }
    }

    pub fn noise_rms(&self) -> f64 {
        libm::sqrt(self.noise.iter().map(|b| b.rms() * b.rms()).sum())
    }

    /// Conservative bound on the raw peak amplitude.
    pub fn peak_bound(&self) -> f64 {
        self.partials.iter().map(|p| p.amplitude).sum::<f64>() + NOISE_CREST * self.noise_rms()
    }
}

/// Default envelopes, indexed by [`AcousticState::index`].
pub fn default_envelopes() -> [SpectralEnvelope; 4] {
    let active = SpectralEnvelope {
        partials: [(100.0, 0.4), (200.0, 0.3), (400.0, 0.2), (1000.0, 0.1)]
            .into_iter()
            .map(|(freq_hz, amplitude)| Partial { freq_hz, amplitude })
            .collect(),
        noise: vec![NoiseBand::new(0.0, 20_000.0, 0.02)],
    };
    let inactive = SpectralEnvelope {
        partials: Vec::new(),
        noise: vec![NoiseBand::new(0.0, 2_000.0, 0.01)],
    };
    // Cavitation of the dry pump and the water rush through the open valve.
    let dry = active.with_layer(NoiseBand::new(4_000.0, 20_000.0, 0.1));
    let reflow = inactive.with_layer(NoiseBand::new(5_000.0, 20_000.0, 0.08));
    [active, inactive, dry, reflow]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate: f64,
    pub seed: u64,
    /// Indexed by [`AcousticState::index`].
    pub envelopes: [SpectralEnvelope; 4],
    pub ramp_ms: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sample_rate: 48_000.0,
            seed: 0,
            envelopes: default_envelopes(),
            ramp_ms: 20.0,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        SynthConfig {
            seed,
            ..SynthConfig::default()
        }
    }

    pub fn envelope(&self, state: AcousticState) -> &SpectralEnvelope {
        &self.envelopes[state.index()]
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.sample_rate.is_finite() && self.sample_rate / 2.0 > 19_000.0) {
            return Err(SynthError::InvalidConfig(
                "sample rate must put Nyquist above 19 kHz",
            ));
        }
        if !(self.ramp_ms.is_finite() && self.ramp_ms >= 0.0) {
            return Err(SynthError::InvalidConfig("ramp must be >= 0 ms"));
        }
        for state in AcousticState::ALL {
            self.envelope(state).validate(state, self.sample_rate)?;
        }
        Ok(())
    }

    pub fn ramp_samples(&self) -> u64 {
        libm::round(self.ramp_ms * 1e-3 * self.sample_rate) as u64
    }
}

/// Stream position of a block renderer. Oscillator phases and noise state
/// are functions of this index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseState {
    pub position: u64,
}

#[derive(Debug, Clone)]
struct Voice {
    /// `(amplitude, cycles per sample, phase increment)`.
    partials: Vec<(f64, f64, Complex64)>,
    bin_scale: Vec<f64>,
    bin_range: Option<(usize, usize)>,
}

impl Voice {
    fn new(env: &SpectralEnvelope, sample_rate: f64) -> Voice {
        let partials = env
            .partials
            .iter()
            .map(|p| {
                let w = 2.0 * PI * p.freq_hz / sample_rate;
                (
                    p.amplitude,
                    p.freq_hz / sample_rate,
                    Complex64::new(libm::cos(w), libm::sin(w)),
                )
            })
            .collect();
        let df = sample_rate / NOISE_BLOCK as f64;
        let bin_scale: Vec<f64> = (0..=NOISE_BLOCK / 2)
            .map(|k| {
                let f = k as f64 * df;
                if k == 0 || k == NOISE_BLOCK / 2 {
                    return 0.0;
                }
                env.noise
                    .iter()
                    .find(|b| b.low_hz <= f && f < b.high_hz)
                    .map(|b| libm::sqrt(b.level * b.level * df / 1000.0 / 2.0))
                    .unwrap_or(0.0)
            })
            .collect();
        let first = bin_scale.iter().position(|s| *s > 0.0);
        let last = bin_scale.iter().rposition(|s| *s > 0.0);
        Voice {
            partials,
            bin_scale,
            bin_range: first.zip(last),
        }
    }
}

/// One noise block pair from a single complex transform: the real part is
/// block `2p`, the imaginary part block `2p + 1`.
struct PairCache {
    pair: Option<u64>,
    buf: Vec<Complex64>,
}

/// Prepared renderer for one [`SynthConfig`].
#[derive(Debug, Clone)]
pub struct Synth {
    config: SynthConfig,
    gain: f64,
    voices: Vec<Voice>,
    plan: FftPlan,
    window: Vec<f64>,
    noise_key: u64,
}

impl Synth {
    pub fn new(config: SynthConfig) -> Result<Synth, SynthError> {
        config.validate()?;
        let bound = config
            .envelopes
            .iter()
            .map(SpectralEnvelope::peak_bound)
            .fold(0.0, f64::max);
        let gain = if bound > 1.0 { 1.0 / bound } else { 1.0 };
        let voices = config
            .envelopes
            .iter()
            .map(|e| Voice::new(e, config.sample_rate))
            .collect();
        let window = (0..NOISE_BLOCK)
            .map(|m| libm::sin(PI * (m as f64 + 0.5) / NOISE_BLOCK as f64))
            .collect();
        let noise_key = rng::substream(config.seed, 0x004E_4F49_5345);
        Ok(Synth {
            plan: FftPlan::new(NOISE_BLOCK).expect("noise block is a power of two"),
            config,
            gain,
            voices,
            window,
            noise_key,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    /// Output gain applied to every state so the loudest envelope fits in
    /// [-1, 1]; 1 when no envelope needs attenuation.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    fn add_partials(&self, voice: &Voice, start: u64, out: &mut [f64]) {
        let end = start + out.len() as u64;
        for &(amp, cycles, step) in &voice.partials {
            let mut n = start;
            while n < end {
                let anchor = n / OSC_ANCHOR * OSC_ANCHOR;
                let stop = (anchor + OSC_ANCHOR).min(end);
                let turns = cycles * anchor as f64;
                let theta = 2.0 * PI * (turns - libm::floor(turns));
                let mut z = Complex64::new(libm::cos(theta), libm::sin(theta));
                for _ in anchor..n {
                    z *= step;
                }
                for m in n..stop {
                    out[(m - start) as usize] += amp * z.im;
                    z *= step;
                }
                n = stop;
            }
        }
    }

    fn noise_pair(&self, voice: &Voice, pair: u64, cache: &mut PairCache) {
        if cache.pair == Some(pair) {
            return;
        }
        let buf = &mut cache.buf;
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        if let Some((lo, hi)) = voice.bin_range {
            let key = rng::substream(self.noise_key, pair);
            for k in lo..=hi {
                let s = voice.bin_scale[k];
                if s == 0.0 {
                    continue;
                }
                let (a, b) = rng::uniform_pair(key, 2 * k as u64);
                let (c, d) = rng::uniform_pair(key, 2 * k as u64 + 1);
                buf[k] = Complex64::new(s * a, s * b);
                buf[NOISE_BLOCK - k] = Complex64::new(s * c, s * d);
            }
            self.plan.forward(buf);
        }
        cache.pair = Some(pair);
    }

    fn add_noise(&self, voice: &Voice, start: u64, out: &mut [f64]) {
        if voice.bin_range.is_none() || out.is_empty() {
            return;
        }
        let hop = (NOISE_BLOCK / 2) as u64;
        let end = start + out.len() as u64;
        let mut cache = PairCache {
            pair: None,
            buf: vec![Complex64::new(0.0, 0.0); NOISE_BLOCK],
        };
        // Block j covers [(j - 1) * hop, (j + 1) * hop).
        for j in start / hop..=(end - 1) / hop + 1 {
            let block_lo = (j * hop).saturating_sub(hop);
            let lo = block_lo.max(start);
            let hi = ((j + 1) * hop).min(end);
            if lo >= hi {
                continue;
            }
            self.noise_pair(voice, j / 2, &mut cache);
            let imag = j % 2 == 1;
            // Offset of sample n inside block j is n + hop - j * hop.
            let offset = |n: u64| (n + hop - j * hop) as usize;
            for n in lo..hi {
                let m = offset(n);
                let z = cache.buf[m];
                let v = if imag { z.im } else { z.re };
                out[(n - start) as usize] += self.window[m] * v;
            }
        }
    }

    /// Raw (pre-gain) signal of one state over `[start, start + out.len())`.
    fn raw_state(&self, state: AcousticState, start: u64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let voice = &self.voices[state.index()];
        self.add_partials(voice, start, out);
        self.add_noise(voice, start, out);
    }

    fn finish(&self, start: u64, out: &mut [f64]) -> Result<(), SynthError> {
        for (i, v) in out.iter_mut().enumerate() {
            if !(libm::fabs(*v) <= CLIP_LIMIT) {
                return Err(SynthError::Clipping {
                    sample: start + i as u64,
                    peak: libm::fabs(*v),
                });
            }
            *v = (*v * self.gain).clamp(-1.0, 1.0);
        }
        Ok(())
    }

    /// Render `n_samples` of a single state starting at `phase.position`, and
    /// advance the position.
    pub fn synthesize_block(
        &self,
        state: AcousticState,
        n_samples: usize,
        phase: &mut PhaseState,
    ) -> Result<Vec<f64>, SynthError> {
        let mut out = vec![0.0; n_samples];
        self.raw_state(state, phase.position, &mut out);
        self.finish(phase.position, &mut out)?;
        phase.position += n_samples as u64;
        Ok(out)
    }

    /// Render samples `[start, start + out.len())` of `timeline`, applying the
    /// linear crossfade at each state change.
    pub fn render(&self, timeline: &Timeline, start: u64, out: &mut [f64]) -> Result<(), SynthError> {
        let len = out.len();
        let end = start + len as u64;
        if end > timeline.len() {
            return Err(SynthError::OutOfRange {
                end,
                len: timeline.len(),
            });
        }
        if len == 0 {
            return Ok(());
        }
        let segs = timeline.changes();
        let ramp = timeline.ramp();
        let first = timeline.segment_index(start);
        let last = timeline.segment_index(end - 1);

        let mut raw: [Option<Vec<f64>>; 4] = Default::default();
        let mut need = |s: AcousticState| {
            if raw[s.index()].is_none() {
                let mut buf = vec![0.0; len];
                self.raw_state(s, start, &mut buf);
                raw[s.index()] = Some(buf);
            }
        };
        for i in first..=last {
            need(segs[i].state);
            if i > 0 && segs[i].sample + ramp > start {
                need(segs[i - 1].state);
            }
        }

        for i in first..=last {
            let seg_end = segs.get(i + 1).map_or(timeline.len(), |s| s.sample);
            let lo = segs[i].sample.max(start);
            let hi = seg_end.min(end);
            let cur = raw[segs[i].state.index()].as_ref().expect("rendered above");
            let prev = if i > 0 {
                raw[segs[i - 1].state.index()].as_ref()
            } else {
                None
            };
            for n in lo..hi {
                let k = (n - start) as usize;
                let since = n - segs[i].sample;
                out[k] = match prev {
                    Some(prev) if since < ramp => {
                        let a = (since as f64 + 0.5) / ramp as f64;
                        (1.0 - a) * prev[k] + a * cur[k]
                    }
                    _ => cur[k],
                };
            }
        }
        self.finish(start, out)
    }
}

/// Start of a run of samples in one acoustic state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelChange {
    pub sample: u64,
    pub state: AcousticState,
}

/// Per-sample acoustic state ground truth derived from a process trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    changes: Vec<LabelChange>,
    len: u64,
    ramp: u64,
}

impl Timeline {
    /// Tick `i` of the trace covers samples up to `round(t_i * sample_rate)`.
    pub fn from_trace(
        trace: &[TelemetryFrame],
        sample_rate: f64,
        ramp_samples: u64,
    ) -> Result<Timeline, SynthError> {
        if trace.is_empty() {
            return Err(SynthError::EmptyTrace);
        }
        let mut changes: Vec<LabelChange> = Vec::new();
        let mut tick_start = 0u64;
        let mut last_t = f64::NEG_INFINITY;
        for (i, frame) in trace.iter().enumerate() {
            if !(frame.t > last_t) || frame.t <= 0.0 {
                return Err(SynthError::UnorderedTrace { tick: i });
            }
            last_t = frame.t;
            let tick_end = libm::round(frame.t * sample_rate) as u64;
            if tick_end <= tick_start {
                continue;
            }
            let state = acoustic_state_of(&frame.true_state);
            if changes.last().map(|c| c.state) != Some(state) {
                changes.push(LabelChange {
                    sample: tick_start,
                    state,
                });
            }
            tick_start = tick_end;
        }
        if changes.is_empty() {
            return Err(SynthError::EmptyTrace);
        }
        Ok(Timeline {
            changes,
            len: tick_start,
            ramp: ramp_samples,
        })
    }

    /// Build directly from change points; `changes[0].sample` must be 0.
    pub fn from_changes(changes: Vec<LabelChange>, len: u64, ramp: u64) -> Timeline {
        assert!(!changes.is_empty() && changes[0].sample == 0);
        assert!(changes.windows(2).all(|w| w[0].sample < w[1].sample));
        assert!(changes.last().unwrap().sample < len);
        Timeline { changes, len, ramp }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ramp(&self) -> u64 {
        self.ramp
    }

    /// Label changes, one per run of identical states, starting at sample 0.
    pub fn changes(&self) -> &[LabelChange] {
        &self.changes
    }

    fn segment_index(&self, n: u64) -> usize {
        self.changes.partition_point(|c| c.sample <= n) - 1
    }

    pub fn state_at(&self, n: u64) -> AcousticState {
        self.changes[self.segment_index(n)].state
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedAudio {
    pub samples: Vec<f64>,
    pub labels: Vec<LabelChange>,
}

/// Render a whole trace into memory. Long traces are better rendered in
/// chunks with [`Synth::render`].
pub fn render_trace(trace: &[TelemetryFrame], config: &SynthConfig) -> Result<RenderedAudio, SynthError> {
    let synth = Synth::new(config.clone())?;
    let timeline = Timeline::from_trace(trace, config.sample_rate, config.ramp_samples())?;
    let mut samples = vec![0.0; timeline.len() as usize];
    synth.render(&timeline, 0, &mut samples)?;
    Ok(RenderedAudio {
        samples,
        labels: timeline.changes().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(on: bool, dry: bool, valve: bool) -> ProcessState {
        ProcessState {
            t: 0.0,
            level_c1: 1.0,
            level_c2: 1.0,
            pump_on: on,
            valve_open: valve,
            pump_dry: dry,
        }
    }

    #[test]
    fn state_mapping() {
        assert_eq!(acoustic_state_of(&ps(true, false, false)), AcousticState::PumpActiveNormal);
        assert_eq!(acoustic_state_of(&ps(true, true, false)), AcousticState::PumpActiveDry);
        assert_eq!(acoustic_state_of(&ps(false, false, true)), AcousticState::PumpInactiveReflow);
        assert_eq!(acoustic_state_of(&ps(false, false, false)), AcousticState::PumpInactiveNormal);
        assert_eq!(acoustic_state_of(&ps(true, false, true)), AcousticState::PumpActiveNormal);
    }

    #[test]
    fn names_round_trip() {
        for s in AcousticState::ALL {
            assert_eq!(AcousticState::from_name(s.name()), Some(s));
        }
    }

    #[test]
    fn layering_adds_power_and_splits_bands() {
        let dry = &default_envelopes()[AcousticState::PumpActiveDry.index()];
        assert_eq!(dry.noise.len(), 2);
        assert_eq!(dry.noise[0], NoiseBand::new(0.0, 4000.0, 0.02));
        assert_eq!(dry.noise[1].low_hz, 4000.0);
        assert!((dry.noise[1].level - libm::sqrt(0.02 * 0.02 + 0.1 * 0.1)).abs() < 1e-15);
        let reflow = &default_envelopes()[AcousticState::PumpInactiveReflow.index()];
        assert_eq!(reflow.noise.len(), 2);
        assert_eq!(reflow.noise[1], NoiseBand::new(5000.0, 20000.0, 0.08));
    }

    #[test]
    fn pure_tone_keeps_its_amplitude() {
        let mut envelopes = default_envelopes();
        for e in envelopes.iter_mut() {
            *e = SpectralEnvelope {
                partials: vec![Partial {
                    freq_hz: 1000.0,
                    amplitude: 0.5,
                }],
                noise: Vec::new(),
            };
        }
        let synth = Synth::new(SynthConfig {
            envelopes,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_eq!(synth.gain(), 1.0);
        let mut phase = PhaseState::default();
        let x = synth
            .synthesize_block(AcousticState::PumpActiveNormal, 4800, &mut phase)
            .unwrap();
        assert_eq!(phase.position, 4800);
        for (n, v) in x.iter().enumerate() {
            let expected = 0.5 * libm::sin(2.0 * PI * 1000.0 * n as f64 / 48000.0);
            assert!((v - expected).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn blocks_are_continuous_and_deterministic() {
        let synth = Synth::new(SynthConfig::with_seed(5)).unwrap();
        let mut phase = PhaseState::default();
        let a = synth
            .synthesize_block(AcousticState::PumpActiveDry, 10_000, &mut phase)
            .unwrap();
        let mut phase = PhaseState::default();
        let mut b = synth
            .synthesize_block(AcousticState::PumpActiveDry, 3_333, &mut phase)
            .unwrap();
        b.extend(
            synth
                .synthesize_block(AcousticState::PumpActiveDry, 6_667, &mut phase)
                .unwrap(),
        );
        assert_eq!(a, b);
        assert!(a.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
    }

    #[test]
    fn invalid_configs() {
        let cfg = SynthConfig {
            sample_rate: 32_000.0,
            ..SynthConfig::default()
        };
        assert!(matches!(Synth::new(cfg), Err(SynthError::InvalidConfig(_))));
        let mut cfg = SynthConfig::default();
        cfg.envelopes[1].noise.push(NoiseBand::new(1000.0, 3000.0, 0.1));
        assert!(matches!(Synth::new(cfg), Err(SynthError::InvalidEnvelope { .. })));
    }

    #[test]
    fn oversized_envelope_clips() {
        let mut cfg = SynthConfig::default();
        cfg.envelopes[0].partials = vec![Partial {
            freq_hz: 50.0,
            amplitude: 20.0,
        }];
        let synth = Synth::new(cfg).unwrap();
        let mut phase = PhaseState::default();
        let err = synth
            .synthesize_block(AcousticState::PumpActiveNormal, 2000, &mut phase)
            .unwrap_err();
        assert!(matches!(err, SynthError::Clipping { .. }));
    }
}
