//! Scenario documents: process parameters, attack schedule and analysis
//! settings for one run.

use std::path::Path;

use pumpguard_core::process::{episodes, run_scenario, SimError};
use pumpguard_core::{
    AttackScript, DetectionConfig, FrameSpec, ProcessParams, SynthConfig, TelemetryFrame, Window,
    WindowKind,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest scenario accepted; training needs several pump cycles.
pub const MIN_DURATION_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub sample_rate: f64,
    pub seed: u64,
    pub ramp_ms: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        let c = SynthConfig::default();
        SynthSettings {
            sample_rate: c.sample_rate,
            seed: c.seed,
            ramp_ms: c.ramp_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub duration_s: f64,
    pub process: ProcessParams,
    pub attacks: AttackScript,
    pub synth: SynthSettings,
    pub frames: FrameSpec,
    pub detect: DetectionConfig,
}

impl Scenario {
    /// Twenty minutes of normal operation with default settings.
    pub fn normal(seed: u64) -> Scenario {
        Scenario {
            duration_s: 1200.0,
            process: ProcessParams::default(),
            attacks: AttackScript::none(),
            synth: SynthSettings {
                seed,
                ..SynthSettings::default()
            },
            frames: FrameSpec::default(),
            detect: DetectionConfig::default(),
        }
    }

    /// Twenty minutes with one pump override and three valve-open windows,
    /// telemetry spoofed.
    pub fn attack_run(seed: u64) -> Result<Scenario> {
        let mut sc = Scenario::normal(seed);
        sc.attacks.spoof_telemetry = true;
        sc.place_attacks(&[150.0, 400.0, 650.0], &[850.0])?;
        Ok(sc)
    }

    /// Add attack windows anchored to pump stops of the current schedule.
    ///
    /// For each time in `valve_after` a valve window opens two seconds after
    /// the first later pump stop and lasts five seconds, so Container 2 stays
    /// above the restart level and the pump stays off. For each time in
    /// `override_after` a 60 s pump override starts five seconds after the
    /// first later pump stop, long enough to run Container 1 dry.
    pub fn place_attacks(&mut self, valve_after: &[f64], override_after: &[f64]) -> Result<()> {
        for &target in valve_after {
            let start = round_tenth(self.pump_stop_after(target)? + 2.0);
            self.attacks.valve_open.push(Window::new(start, start + 5.0));
        }
        for &target in override_after {
            let start = round_tenth(self.pump_stop_after(target)? + 5.0);
            self.attacks.pump_override.push(Window::new(start, start + 60.0));
        }
        self.attacks.valve_open.sort_by(|a, b| a.start.total_cmp(&b.start));
        self.attacks.pump_override.sort_by(|a, b| a.start.total_cmp(&b.start));
        self.validate()
    }

    fn pump_stop_after(&self, t: f64) -> Result<f64> {
        let trace = self.simulate()?;
        episodes(&trace, |s| s.pump_on)
            .into_iter()
            .map(|(_, end)| trace[end - 1].t)
            .find(|&stop| stop >= t)
            .ok_or_else(|| Error::Mismatch(format!("no pump stop after t = {t} s")))
    }

    /// The same scenario with every attack removed.
    pub fn without_attacks(&self) -> Scenario {
        Scenario {
            attacks: AttackScript::none(),
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut sc = self.clone();
        sc.synth.seed = seed;
        sc
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            sample_rate: self.synth.sample_rate,
            seed: self.synth.seed,
            ramp_ms: self.synth.ramp_ms,
            ..SynthConfig::default()
        }
    }

    pub fn simulate(&self) -> Result<Vec<TelemetryFrame>> {
        run_scenario(&self.process, &self.attacks, self.duration_s).map_err(sim_error)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s >= MIN_DURATION_S) {
            return Err(Error::config("duration_s", format!("must be >= {MIN_DURATION_S}")));
        }
        self.process.validate().map_err(sim_error)?;
        self.attacks.validate().map_err(sim_error)?;
        self.synth_config()
            .validate()
            .map_err(|e| Error::config("synth", e.to_string()))?;
        self.frames
            .validate()
            .map_err(|e| Error::config("frames", e.to_string()))?;
        if self.frames.frame_len as f64 > self.duration_s * self.synth.sample_rate {
            return Err(Error::config("frames.len", "longer than the scenario audio"));
        }
        self.detect
            .validate()
            .map_err(|e| Error::config("detect", e.to_string()))?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let doc: ScenarioDoc =
            serde_json::from_str(text).map_err(|e| Error::malformed("<scenario>", e))?;
        let sc = doc.into_scenario()?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ScenarioDoc = serde_json::from_str(&text).map_err(|e| Error::malformed(path, e))?;
        let sc = doc.into_scenario()?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&ScenarioDoc::from(self)).expect("plain data");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

fn round_tenth(t: f64) -> f64 {
    (t * 10.0).round() / 10.0
}

fn sim_error(e: SimError) -> Error {
    match e {
        SimError::InvalidParam { field, constraint } => {
            Error::config(format!("process.{field}"), constraint)
        }
        SimError::InvalidScript(why) => Error::config("attacks", why),
        SimError::InvalidDuration => Error::config("duration_s", "must be positive and finite"),
        other => Error::Sim(other),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    duration_s: f64,
    #[serde(default)]
    process: ProcessDoc,
    #[serde(default)]
    attacks: AttacksDoc,
    #[serde(default)]
    synth: SynthDoc,
    #[serde(default)]
    frames: FramesDoc,
    #[serde(default)]
    detect: DetectDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProcessDoc {
    area_c1: f64,
    area_c2: f64,
    pump_flow: f64,
    reflow_natural: f64,
    reflow_valve_open: f64,
    threshold_high: f64,
    hysteresis: f64,
    init_c1: f64,
    init_c2: f64,
    dt: f64,
}

impl Default for ProcessDoc {
    fn default() -> Self {
        ProcessDoc::from(&ProcessParams::default())
    }
}

impl From<&ProcessParams> for ProcessDoc {
    fn from(p: &ProcessParams) -> Self {
        ProcessDoc {
            area_c1: p.area_c1,
            area_c2: p.area_c2,
            pump_flow: p.pump_flow,
            reflow_natural: p.reflow_natural,
            reflow_valve_open: p.reflow_valve_open,
            threshold_high: p.threshold_high,
            hysteresis: p.hysteresis,
            init_c1: p.init_level_c1,
            init_c2: p.init_level_c2,
            dt: p.dt,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AttacksDoc {
    pump_override: Vec<[f64; 2]>,
    valve_open: Vec<[f64; 2]>,
    spoof: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SynthDoc {
    sample_rate: f64,
    seed: u64,
    ramp_ms: f64,
}

impl Default for SynthDoc {
    fn default() -> Self {
        let s = SynthSettings::default();
        SynthDoc {
            sample_rate: s.sample_rate,
            seed: s.seed,
            ramp_ms: s.ramp_ms,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FramesDoc {
    len: usize,
    hop: usize,
    window: String,
}

impl Default for FramesDoc {
    fn default() -> Self {
        let f = FrameSpec::default();
        FramesDoc {
            len: f.frame_len,
            hop: f.hop,
            window: f.window.name().to_string(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DetectDoc {
    z_threshold: f64,
    consecutive: usize,
    ratio_margin: f64,
}

impl Default for DetectDoc {
    fn default() -> Self {
        let d = DetectionConfig::default();
        DetectDoc {
            z_threshold: d.z_threshold,
            consecutive: d.consecutive_frames,
            ratio_margin: d.ratio_margin,
        }
    }
}

fn windows(key: &str, raw: &[[f64; 2]]) -> Result<Vec<Window>> {
    raw.iter()
        .map(|&[a, b]| {
            if a.is_finite() && b.is_finite() && a < b && a >= 0.0 {
                Ok(Window::new(a, b))
            } else {
                Err(Error::config(
                    format!("attacks.{key}"),
                    format!("window [{a}, {b}] must satisfy 0 <= t0 < t1"),
                ))
            }
        })
        .collect()
}

impl ScenarioDoc {
    fn into_scenario(self) -> Result<Scenario> {
        let p = self.process;
        let window = WindowKind::from_name(&self.frames.window).ok_or_else(|| {
            Error::config(
                "frames.window",
                format!("unknown window `{}` (expected hann or rectangular)", self.frames.window),
            )
        })?;
        Ok(Scenario {
            duration_s: self.duration_s,
            process: ProcessParams {
                area_c1: p.area_c1,
                area_c2: p.area_c2,
                pump_flow: p.pump_flow,
                reflow_natural: p.reflow_natural,
                reflow_valve_open: p.reflow_valve_open,
                threshold_high: p.threshold_high,
                hysteresis: p.hysteresis,
                init_level_c1: p.init_c1,
                init_level_c2: p.init_c2,
                dt: p.dt,
            },
            attacks: AttackScript {
                pump_override: windows("pump_override", &self.attacks.pump_override)?,
                valve_open: windows("valve_open", &self.attacks.valve_open)?,
                spoof_telemetry: self.attacks.spoof,
            },
            synth: SynthSettings {
                sample_rate: self.synth.sample_rate,
                seed: self.synth.seed,
                ramp_ms: self.synth.ramp_ms,
            },
            frames: FrameSpec {
                frame_len: self.frames.len,
                hop: self.frames.hop,
                window,
            },
            detect: DetectionConfig {
                z_threshold: self.detect.z_threshold,
                consecutive_frames: self.detect.consecutive,
                ratio_margin: self.detect.ratio_margin,
            },
        })
    }
}

impl From<&Scenario> for ScenarioDoc {
    fn from(sc: &Scenario) -> Self {
        let win = |ws: &[Window]| ws.iter().map(|w| [w.start, w.end]).collect();
        ScenarioDoc {
            duration_s: sc.duration_s,
            process: ProcessDoc::from(&sc.process),
            attacks: AttacksDoc {
                pump_override: win(&sc.attacks.pump_override),
                valve_open: win(&sc.attacks.valve_open),
                spoof: sc.attacks.spoof_telemetry,
            },
            synth: SynthDoc {
                sample_rate: sc.synth.sample_rate,
                seed: sc.synth.seed,
                ramp_ms: sc.synth.ramp_ms,
            },
            frames: FramesDoc {
                len: sc.frames.frame_len,
                hop: sc.frames.hop,
                window: sc.frames.window.name().to_string(),
            },
            detect: DetectDoc {
                z_threshold: sc.detect.z_threshold,
                consecutive: sc.detect.consecutive_frames,
                ratio_margin: sc.detect.ratio_margin,
            },
        }
    }
}
