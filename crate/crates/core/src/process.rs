//! Two-container batch process: pump P101 moves water from Container 1 to
//! Container 2 until a level threshold is hit, natural reflow drains it back,
//! and the pump restarts once the level falls below the threshold minus the
//! hysteresis band.
//!
//! Attacks are injected between the controller and the plant: a pump override
//! forces the pump on (eventually running it dry) and a valve window opens the
//! release valve of Container 2. When telemetry spoofing is enabled the
//! reported values come from an attack-free twin stepped in lockstep.

use alloc::vec::Vec;
use core::fmt;

/// Relative tolerance used when comparing simulation clocks of twin runs.
const CLOCK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// A parameter violates its constraint. `field` is the scenario key.
    InvalidParam {
        field: &'static str,
        constraint: &'static str,
    },
    InvalidScript(&'static str),
    InvalidDuration,
    NonFiniteLevel { t: f64 },
    TimeMismatch { true_t: f64, shadow_t: f64 },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidParam { field, constraint } => {
                write!(f, "invalid process parameter `{field}`: {constraint}")
            }
            SimError::InvalidScript(why) => write!(f, "invalid attack script: {why}"),
            SimError::InvalidDuration => write!(f, "scenario duration must be positive and finite"),
            SimError::NonFiniteLevel { t } => write!(f, "non-finite tank level at t = {t} s"),
            SimError::TimeMismatch { true_t, shadow_t } => write!(
                f,
                "telemetry twin out of step: true t = {true_t} s, shadow t = {shadow_t} s"
            ),
        }
    }
}

impl core::error::Error for SimError {}

/// Geometry, flows and controller settings. Units: cm, cm^2, cm^3/s, s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    pub area_c1: f64,
    pub area_c2: f64,
    pub pump_flow: f64,
    pub reflow_natural: f64,
    pub reflow_valve_open: f64,
    /// Upper level threshold in Container 2.
    pub threshold_high: f64,
    /// Width of the hysteresis band below `threshold_high`.
    pub hysteresis: f64,
    pub init_level_c1: f64,
    pub init_level_c2: f64,
    pub dt: f64,
}

impl Default for ProcessParams {
    fn default() -> Self {
        ProcessParams {
            area_c1: 100.0,
            area_c2: 100.0,
            pump_flow: 50.0,
            reflow_natural: 5.0,
            reflow_valve_open: 25.0,
            threshold_high: 10.0,
            hysteresis: 2.0,
            init_level_c1: 8.0,
            init_level_c2: 8.0,
            dt: 0.1,
        }
    }
}

impl ProcessParams {
    pub fn validate(&self) -> Result<(), SimError> {
        fn check(ok: bool, field: &'static str, constraint: &'static str) -> Result<(), SimError> {
            if ok {
                Ok(())
            } else {
                Err(SimError::InvalidParam { field, constraint })
            }
        }
        let pos = |v: f64| v.is_finite() && v > 0.0;
        check(pos(self.area_c1), "area_c1", "must be > 0")?;
        check(pos(self.area_c2), "area_c2", "must be > 0")?;
        check(pos(self.pump_flow), "pump_flow", "must be > 0")?;
        check(pos(self.reflow_natural), "reflow_natural", "must be > 0")?;
        check(
            self.reflow_valve_open.is_finite() && self.reflow_valve_open > self.reflow_natural,
            "reflow_valve_open",
            "must exceed reflow_natural",
        )?;
        check(pos(self.threshold_high), "threshold_high", "must be > 0")?;
        check(
            pos(self.hysteresis) && self.hysteresis < self.threshold_high,
            "hysteresis",
            "must satisfy 0 < hysteresis < threshold_high",
        )?;
        check(
            self.init_level_c1.is_finite() && self.init_level_c1 >= 0.0,
            "init_c1",
            "must be >= 0",
        )?;
        check(
            self.init_level_c2.is_finite()
                && self.init_level_c2 >= 0.0
                && self.init_level_c2 < self.threshold_high,
            "init_c2",
            "must satisfy 0 <= init_c2 < threshold_high",
        )?;
        check(pos(self.dt), "dt", "must be > 0")?;
        // One step may move at most 10% of either tank's initial volume.
        let v1 = self.area_c1 * self.init_level_c1;
        let v2 = self.area_c2 * self.init_level_c2;
        let out_c1 = self.pump_flow * self.dt;
        let out_c2 = self.reflow_valve_open * self.dt;
        check(
            out_c1 < 0.1 * v1 && out_c2 < 0.1 * v2,
            "dt",
            "one step must transfer less than 10% of either tank's volume",
        )
    }

    /// Level at which the controller switches the pump back on.
    pub fn lower_threshold(&self) -> f64 {
        self.threshold_high - self.hysteresis
    }

    pub fn initial_state(&self) -> ProcessState {
        ProcessState {
            t: 0.0,
            level_c1: self.init_level_c1,
            level_c2: self.init_level_c2,
            pump_on: false,
            valve_open: false,
            pump_dry: false,
        }
    }

    /// Number of ticks needed to cover `duration` seconds.
    pub fn tick_count(&self, duration: f64) -> usize {
        libm::ceil(duration / self.dt - 1e-9) as usize
    }
}

/// Ground-truth physical state. `pump_on`, `valve_open` and `pump_dry`
/// describe the actuation during the step that ended at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessState {
    pub t: f64,
    pub level_c1: f64,
    pub level_c2: f64,
    pub pump_on: bool,
    pub valve_open: bool,
    pub pump_dry: bool,
}

impl ProcessState {
    /// Total water volume in cm^3.
    pub fn volume(&self, params: &ProcessParams) -> f64 {
        params.area_c1 * self.level_c1 + params.area_c2 * self.level_c2
    }
}

/// Half-open time interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Window { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }

    pub fn overlaps(&self, start: f64, end: f64) -> bool {
        start < self.end && self.start < end
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttackScript {
    pub pump_override: Vec<Window>,
    pub valve_open: Vec<Window>,
    pub spoof_telemetry: bool,
}

impl AttackScript {
    pub fn none() -> Self {
        AttackScript::default()
    }

    pub fn has_attacks(&self) -> bool {
        !self.pump_override.is_empty() || !self.valve_open.is_empty()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for list in [&self.pump_override, &self.valve_open] {
            for w in list {
                if !(w.start.is_finite() && w.end.is_finite()) || w.start >= w.end {
                    return Err(SimError::InvalidScript("window must satisfy start < end"));
                }
            }
            let mut sorted: Vec<Window> = list.clone();
            sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
            if sorted.windows(2).any(|p| p[1].start < p[0].end) {
                return Err(SimError::InvalidScript("windows in one list overlap"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryFrame {
    pub t: f64,
    pub true_state: ProcessState,
    pub reported: ProcessState,
}

/// Hysteresis controller: on at or below the lower threshold, off at or above
/// the upper one, otherwise keep the current command.
pub fn control_step(state: &ProcessState, params: &ProcessParams) -> bool {
    if state.level_c2 >= params.threshold_high {
        false
    } else if state.level_c2 <= params.lower_threshold() {
        true
    } else {
        state.pump_on
    }
}

/// One explicit Euler step. The valve position is taken from
/// `state.valve_open`; `pump_cmd` is the resolved pump command.
///
/// Pump and reflow are evaluated on the volumes at the start of the step, so
/// neither can take more water than its source tank holds. The pump is dry
/// when it drains Container 1 to zero within the step (including the case
/// where Container 1 was already empty and nothing is transferred).
pub fn integrate(
    state: &ProcessState,
    pump_cmd: bool,
    params: &ProcessParams,
) -> Result<ProcessState, SimError> {
    if !(state.level_c1.is_finite() && state.level_c2.is_finite()) {
        return Err(SimError::NonFiniteLevel { t: state.t });
    }
    let v1 = params.area_c1 * state.level_c1.max(0.0);
    let v2 = params.area_c2 * state.level_c2.max(0.0);
    let stroke = params.pump_flow * params.dt;

    let pumped = if pump_cmd && v1 > 0.0 { stroke.min(v1) } else { 0.0 };
    let dry = pump_cmd && v1 <= stroke;

    let reflow_rate = if state.valve_open {
        params.reflow_valve_open
    } else {
        params.reflow_natural
    };
    let reflow = (reflow_rate * params.dt).min(v2);

    let next = ProcessState {
        t: state.t + params.dt,
        level_c1: (v1 - pumped + reflow) / params.area_c1,
        level_c2: (v2 + pumped - reflow) / params.area_c2,
        pump_on: pump_cmd,
        valve_open: state.valve_open,
        pump_dry: dry,
    };
    if !(next.level_c1.is_finite() && next.level_c2.is_finite()) {
        return Err(SimError::NonFiniteLevel { t: next.t });
    }
    Ok(next)
}

/// Resolve the attacked actuation at time `t`: returns `(pump_cmd, valve_open)`.
pub fn apply_attack(controller_cmd: bool, script: &AttackScript, t: f64) -> (bool, bool) {
    let forced = script.pump_override.iter().any(|w| w.contains(t));
    let valve = script.valve_open.iter().any(|w| w.contains(t));
    (controller_cmd || forced, valve)
}

/// Build the telemetry the PLC would report. With spoofing enabled the
/// reported state is the attack-free twin.
pub fn report_telemetry(
    true_state: &ProcessState,
    shadow: &ProcessState,
    script: &AttackScript,
) -> Result<TelemetryFrame, SimError> {
    let scale = 1.0f64.max(libm::fabs(true_state.t));
    if libm::fabs(true_state.t - shadow.t) > CLOCK_TOLERANCE * scale {
        return Err(SimError::TimeMismatch {
            true_t: true_state.t,
            shadow_t: shadow.t,
        });
    }
    Ok(TelemetryFrame {
        t: true_state.t,
        true_state: *true_state,
        reported: if script.spoof_telemetry {
            *shadow
        } else {
            *true_state
        },
    })
}

/// Run the process for `duration` seconds: controller, attack resolution and
/// integration each tick, with the attack-free twin advanced alongside.
pub fn run_scenario(
    params: &ProcessParams,
    script: &AttackScript,
    duration: f64,
) -> Result<Vec<TelemetryFrame>, SimError> {
    params.validate()?;
    script.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(SimError::InvalidDuration);
    }
    let ticks = params.tick_count(duration);
    let mut frames = Vec::with_capacity(ticks);
    let mut state = params.initial_state();
    let mut shadow = params.initial_state();
    for _ in 0..ticks {
        let (cmd, valve) = apply_attack(control_step(&state, params), script, state.t);
        state = integrate(&ProcessState { valve_open: valve, ..state }, cmd, params)?;

        let shadow_cmd = control_step(&shadow, params);
        shadow = integrate(&ProcessState { valve_open: false, ..shadow }, shadow_cmd, params)?;

        frames.push(report_telemetry(&state, &shadow, script)?);
    }
    Ok(frames)
}

/// Maximal runs of ticks where `pred` holds, as `(first_tick, end_tick)`.
pub fn episodes<F>(trace: &[TelemetryFrame], pred: F) -> Vec<(usize, usize)>
where
    F: Fn(&ProcessState) -> bool,
{
    let mut out = Vec::new();
    let mut start = None;
    for (i, f) in trace.iter().enumerate() {
        match (pred(&f.true_state), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, trace.len()));
    }
    out
}
