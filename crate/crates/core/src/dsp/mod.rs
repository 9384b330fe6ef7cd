//! Spectral analysis: framing, windowing, power spectra and band features.

mod fft;

pub use fft::{dft_oracle, fft, is_power_of_two, FftPlan, RealFft};

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use num_complex::Complex64;

/// Floor added to band energies before taking logarithms.
pub const ENERGY_FLOOR: f64 = 1e-12;

/// Cutoffs of the two high-band ratios, in Hz.
pub const RATIO_CUTOFF_4K: f64 = 4000.0;
pub const RATIO_CUTOFF_5K: f64 = 5000.0;

#[derive(Debug, Clone, PartialEq)]
pub enum DspError {
    NotPowerOfTwo(usize),
    InvalidFrameSpec(&'static str),
    TooShort { len: usize, frame_len: usize },
    NonFinite { index: usize },
    BandOutOfRange { low: f64, high: f64, nyquist: f64 },
}

impl fmt::Display for DspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DspError::NotPowerOfTwo(n) => write!(f, "length {n} is not a power of two"),
            DspError::InvalidFrameSpec(why) => write!(f, "invalid frame spec: {why}"),
            DspError::TooShort { len, frame_len } => {
                write!(f, "stream of {len} samples is shorter than one frame ({frame_len})")
            }
            DspError::NonFinite { index } => write!(f, "non-finite sample at index {index}"),
            DspError::BandOutOfRange { low, high, nyquist } => write!(
                f,
                "band [{low}, {high}] Hz lies outside [0, {nyquist}] Hz"
            ),
        }
    }
}

impl core::error::Error for DspError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "hann" => Some(WindowKind::Hann),
            "rectangular" | "rect" => Some(WindowKind::Rectangular),
            _ => None,
        }
    }

    /// Window coefficients. Hann uses the symmetric form
    /// `0.5 * (1 - cos(2 pi n / (N - 1)))`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; n],
            WindowKind::Hann if n == 1 => vec![1.0],
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - libm::cos(2.0 * PI * i as f64 / (n - 1) as f64)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub frame_len: usize,
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            frame_len: 4096,
            hop: 2048,
            window: WindowKind::Hann,
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<(), DspError> {
        if !is_power_of_two(self.frame_len) {
            return Err(DspError::InvalidFrameSpec("frame length must be a power of two"));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(DspError::InvalidFrameSpec("hop must satisfy 0 < hop <= frame length"));
        }
        Ok(())
    }

    /// Number of whole frames in a stream of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    pub fn frame_start(&self, index: usize) -> usize {
        index * self.hop
    }
}

/// Windowed frames of `samples`; the trailing partial frame is dropped.
pub fn frames<'a>(
    samples: &'a [f64],
    spec: &FrameSpec,
) -> Result<impl Iterator<Item = Vec<f64>> + 'a, DspError> {
    spec.validate()?;
    if samples.len() < spec.frame_len {
        return Err(DspError::TooShort {
            len: samples.len(),
            frame_len: spec.frame_len,
        });
    }
    let window = spec.window.coefficients(spec.frame_len);
    let spec = *spec;
    Ok((0..spec.frame_count(samples.len())).map(move |k| {
        let start = spec.frame_start(k);
        samples[start..start + spec.frame_len]
            .iter()
            .zip(&window)
            .map(|(x, w)| x * w)
            .collect()
    }))
}

/// One-sided power spectrum of a single frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    /// `|X[k]|^2 / N`, doubled for `0 < k < N/2`; length `N/2 + 1`.
    pub bins: Vec<f64>,
    pub bin_width: f64,
    pub frame_start: usize,
    /// Sum of squared window coefficients (equals `N` for a rectangular window).
    pub window_power: f64,
}

impl PowerSpectrum {
    pub fn frame_len(&self) -> usize {
        (self.bins.len() - 1) * 2
    }

    pub fn nyquist(&self) -> f64 {
        self.bin_width * (self.bins.len() - 1) as f64
    }

    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.bin_width
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Sum of bins whose centre frequency lies in `[low, high]`.
    pub fn sum_between(&self, low: f64, high: f64) -> f64 {
        let first = libm::ceil(low / self.bin_width).max(0.0) as usize;
        let last = (libm::floor(high / self.bin_width) as usize).min(self.bins.len() - 1);
        if high < 0.0 || first > last {
            return 0.0;
        }
        // Guard against rounding at the edges of the interval.
        (first.saturating_sub(1)..=(last + 1).min(self.bins.len() - 1))
            .filter(|&k| {
                let f = self.freq(k);
                f >= low && f <= high
            })
            .map(|k| self.bins[k])
            .sum()
    }

    /// RMS of the frame restricted to `[low, high]` Hz, compensated for the
    /// analysis window's energy.
    pub fn band_rms(&self, low: f64, high: f64) -> f64 {
        libm::sqrt(self.sum_between(low, high) / self.window_power)
    }
}

/// Computes power spectra for one frame length, reusing the FFT plan.
#[derive(Debug, Clone)]
pub struct SpectrumAnalyzer {
    spec: FrameSpec,
    sample_rate: f64,
    window: Vec<f64>,
    window_power: f64,
    rfft: RealFft,
    frame: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl SpectrumAnalyzer {
    pub fn new(spec: FrameSpec, sample_rate: f64) -> Result<Self, DspError> {
        spec.validate()?;
        let window = spec.window.coefficients(spec.frame_len);
        let window_power = window.iter().map(|w| w * w).sum();
        Ok(SpectrumAnalyzer {
            spec,
            sample_rate,
            window,
            window_power,
            rfft: RealFft::new(spec.frame_len)?,
            frame: vec![0.0; spec.frame_len],
            spectrum: vec![Complex64::new(0.0, 0.0); spec.frame_len / 2 + 1],
        })
    }

    pub fn spec(&self) -> &FrameSpec {
        &self.spec
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Windows `raw` (one frame of unwindowed samples) and returns its spectrum.
    pub fn analyze(&mut self, raw: &[f64], frame_start: usize) -> Result<PowerSpectrum, DspError> {
        assert_eq!(raw.len(), self.spec.frame_len, "frame length mismatch");
        for (i, ((dst, x), w)) in self.frame.iter_mut().zip(raw).zip(&self.window).enumerate() {
            if !x.is_finite() {
                return Err(DspError::NonFinite { index: i });
            }
            *dst = x * w;
        }
        self.rfft.forward(&self.frame, &mut self.spectrum);
        let n = self.spec.frame_len;
        let bins = one_sided(&self.spectrum, n);
        Ok(PowerSpectrum {
            bins,
            bin_width: self.sample_rate / n as f64,
            frame_start,
            window_power: self.window_power,
        })
    }
}

fn one_sided(spectrum: &[Complex64], n: usize) -> Vec<f64> {
    let half = n / 2;
    spectrum
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let p = x.norm_sqr() / n as f64;
            if k > 0 && k < half {
                2.0 * p
            } else {
                p
            }
        })
        .collect()
}

/// Power spectrum of an already windowed frame. The window power recorded in
/// the result assumes a rectangular window; use [`SpectrumAnalyzer`] when the
/// window is applied internally.
pub fn power_spectrum(frame: &[f64], sample_rate: f64) -> Result<PowerSpectrum, DspError> {
    let n = frame.len();
    if !is_power_of_two(n) {
        return Err(DspError::NotPowerOfTwo(n));
    }
    if let Some(i) = frame.iter().position(|x| !x.is_finite()) {
        return Err(DspError::NonFinite { index: i });
    }
    let mut rfft = RealFft::new(n)?;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
    rfft.forward(frame, &mut spectrum);
    Ok(PowerSpectrum {
        bins: one_sided(&spectrum, n),
        bin_width: sample_rate / n as f64,
        frame_start: 0,
        window_power: n as f64,
    })
}

/// A frequency band given by centre and half width, in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub center_hz: f64,
    pub half_width_hz: f64,
}

impl Band {
    pub const fn new(center_hz: f64, half_width_hz: f64) -> Self {
        Band {
            center_hz,
            half_width_hz,
        }
    }

    pub fn low(&self) -> f64 {
        self.center_hz - self.half_width_hz
    }

    pub fn high(&self) -> f64 {
        self.center_hz + self.half_width_hz
    }
}

/// The 5, 10 and 19 kHz detection bands, 250 Hz half width.
pub const DEFAULT_BANDS: [Band; 3] = [
    Band::new(5000.0, 250.0),
    Band::new(10000.0, 250.0),
    Band::new(19000.0, 250.0),
];

pub fn default_bands() -> Vec<Band> {
    DEFAULT_BANDS.to_vec()
}

/// Linear energy in `[center - half_width, center + half_width]`.
pub fn band_energy(ps: &PowerSpectrum, center_hz: f64, half_width_hz: f64) -> Result<f64, DspError> {
    let (low, high) = (center_hz - half_width_hz, center_hz + half_width_hz);
    let nyquist = ps.nyquist();
    if !(low >= 0.0 && high <= nyquist && half_width_hz >= 0.0) {
        return Err(DspError::BandOutOfRange { low, high, nyquist });
    }
    Ok(ps.sum_between(low, high))
}

/// Fraction of spectral energy in bins strictly above `cutoff_hz`.
pub fn high_band_ratio(ps: &PowerSpectrum, cutoff_hz: f64) -> f64 {
    let total = ps.total();
    if total <= 0.0 {
        return 0.0;
    }
    let above: f64 = ps
        .bins
        .iter()
        .enumerate()
        .filter(|(k, _)| ps.freq(*k) > cutoff_hz)
        .map(|(_, p)| p)
        .sum();
    (above / total).clamp(0.0, 1.0)
}

/// Magnitude-weighted mean frequency of the spectrum, 0 for silence.
pub fn spectral_centroid(ps: &PowerSpectrum) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, p) in ps.bins.iter().enumerate() {
        let m = libm::sqrt(*p);
        num += m * ps.freq(k);
        den += m;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn to_db(energy: f64) -> f64 {
    10.0 * libm::log10(energy + ENERGY_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandFeatures {
    /// `10 log10(E + 1e-12)` per configured band.
    pub log_band_energies: Vec<f64>,
    pub high_band_ratio_4k: f64,
    pub high_band_ratio_5k: f64,
}

pub fn features(ps: &PowerSpectrum, bands: &[Band]) -> Result<BandFeatures, DspError> {
    let log_band_energies = bands
        .iter()
        .map(|b| band_energy(ps, b.center_hz, b.half_width_hz).map(to_db))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BandFeatures {
        log_band_energies,
        high_band_ratio_4k: high_band_ratio(ps, RATIO_CUTOFF_4K),
        high_band_ratio_5k: high_band_ratio(ps, RATIO_CUTOFF_5K),
    })
}
