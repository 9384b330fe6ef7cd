//! Human-readable run reports and scoring against known attack windows.

use std::fmt;

use pumpguard_core::{Alert, SegmentLabel, Verdict, Window};

use crate::pipeline::Detection;
use crate::scenario::Scenario;

/// An attack window with the verdict it should produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthEvent {
    pub window: Window,
    pub expected: Verdict,
}

/// Attack windows of a scenario, ordered by start time.
pub fn truth_events(sc: &Scenario) -> Vec<TruthEvent> {
    let mut out: Vec<TruthEvent> = sc
        .attacks
        .pump_override
        .iter()
        .map(|&window| TruthEvent {
            window,
            expected: Verdict::Attack1Suspected,
        })
        .chain(sc.attacks.valve_open.iter().map(|&window| TruthEvent {
            window,
            expected: Verdict::Attack2Suspected,
        }))
        .collect();
    out.sort_by(|a, b| a.window.start.total_cmp(&b.window.start));
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Match alerts to attack windows one-to-one, in time order. An alert
/// matches a window when the frame that raised it overlaps the window.
pub fn confusion(alerts: &[Alert], truth: &[TruthEvent], frame_duration_s: f64) -> Confusion {
    let mut used = vec![false; truth.len()];
    let mut c = Confusion::default();
    for a in alerts {
        let hit = truth
            .iter()
            .enumerate()
            .position(|(i, e)| !used[i] && e.window.overlaps(a.time_s, a.time_s + frame_duration_s));
        match hit {
            Some(i) => {
                used[i] = true;
                c.true_positives += 1;
            }
            None => c.false_positives += 1,
        }
    }
    c.false_negatives = used.iter().filter(|u| !**u).count();
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub frames: usize,
    pub frame_duration_s: f64,
    pub hop_s: f64,
    pub active_segments: usize,
    pub inactive_segments: usize,
    pub alerts: Vec<Alert>,
    pub truth: Option<Vec<TruthEvent>>,
}

impl RunReport {
    pub fn new(detection: &Detection, sample_rate: f64, frame_len: usize, hop: usize) -> Self {
        let count = |l| detection.segments.iter().filter(|s| s.label == l).count();
        RunReport {
            frames: detection.frames,
            frame_duration_s: frame_len as f64 / sample_rate,
            hop_s: hop as f64 / sample_rate,
            active_segments: count(SegmentLabel::Active),
            inactive_segments: count(SegmentLabel::Inactive),
            alerts: detection.alerts.clone(),
            truth: None,
        }
    }

    pub fn with_truth(mut self, truth: Vec<TruthEvent>) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn confusion(&self) -> Option<Confusion> {
        self.truth
            .as_ref()
            .map(|t| confusion(&self.alerts, t, self.frame_duration_s))
    }

    pub fn verdict_count(&self, v: Verdict) -> usize {
        self.alerts.iter().filter(|a| a.verdict == v).count()
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pumpguard detection report")?;
        writeln!(
            f,
            "frames analysed: {} ({:.1} s of audio)",
            self.frames,
            (self.frames.saturating_sub(1)) as f64 * self.hop_s + self.frame_duration_s
        )?;
        writeln!(
            f,
            "segments: {} active, {} inactive",
            self.active_segments, self.inactive_segments
        )?;
        writeln!(f, "alerts: {}", self.alerts.len())?;
        for (i, a) in self.alerts.iter().enumerate() {
            writeln!(
                f,
                "  #{:<3} t = {:>9.3} s  frame {:>6}  {:<8}  max|z| = {:>7.2}  band {:>6} Hz  {}",
                i + 1,
                a.time_s,
                a.frame_index,
                a.label.name(),
                a.max_z,
                a.offending_band_hz,
                a.verdict
            )?;
        }
        let counts: Vec<String> = Verdict::ALL
            .iter()
            .map(|&v| format!("{} {}", v, self.verdict_count(v)))
            .collect();
        writeln!(f, "verdicts: {}", counts.join(", "))?;
        if let (Some(truth), Some(c)) = (&self.truth, self.confusion()) {
            writeln!(f, "known attack windows: {}", truth.len())?;
            for e in truth {
                writeln!(
                    f,
                    "  [{:.1}, {:.1}) s  expect {}",
                    e.window.start, e.window.end, e.expected
                )?;
            }
            writeln!(
                f,
                "true positives {}, false positives {}, false negatives {}",
                c.true_positives, c.false_positives, c.false_negatives
            )?;
        }
        Ok(())
    }
}
