//! Command-line front end. Exit codes: 0 clean, 1 error, 2 alerts raised.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pumpguard_core::dsp::default_bands;
use pumpguard_core::{DetectionConfig, FrameSpec};

use crate::error::{Error, Result};
use crate::formats::{self, Pcm};
use crate::pipeline::{self, Rendered};
use crate::report::{truth_events, RunReport};
use crate::scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "pumpguard", version, about = "Acoustic intrusion detection for a pump process")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario JSON file.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,

    /// Overrides the synthesis seed of the scenario.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the process simulation and write trace.csv.
    Simulate,
    /// Render audio.wav and labels.csv from a scenario (or an existing trace).
    Synth {
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Train profiles.json from a recording of normal operation.
    Train {
        /// Recording to train on; rendered from the scenario when omitted.
        #[arg(long)]
        wav: Option<PathBuf>,
    },
    /// Detect anomalies in a recording; writes alerts.csv and report.txt.
    Detect {
        #[arg(long)]
        db: PathBuf,
        /// Recording to check; rendered from the scenario when omitted.
        #[arg(long)]
        wav: Option<PathBuf>,
        #[arg(long)]
        z_threshold: Option<f64>,
    },
    /// Write the averaged log spectrum of each acoustic state.
    Spectra {
        #[arg(long, requires = "labels")]
        wav: Option<PathBuf>,
        #[arg(long, requires = "wav")]
        labels: Option<PathBuf>,
        /// Also write the power spectrum of this single frame.
        #[arg(long)]
        frame: Option<usize>,
    },
    /// Train on the attack-free variant of a scenario, then detect on the
    /// scenario itself with the next seed.
    E2e,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Alerts,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Clean => 0,
            Outcome::Alerts => 2,
        }
    }
}

/// Parse `args` (including the program name), run, and map the result to
/// an exit code. Usage errors exit with 1.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(cli: &Cli) -> Result<Option<Scenario>> {
    let Some(path) = &cli.scenario else {
        return Ok(None);
    };
    let sc = Scenario::load(path)?;
    Ok(Some(match cli.seed {
        Some(seed) => sc.with_seed(seed),
        None => sc,
    }))
}

fn require_scenario(cli: &Cli, what: &str) -> Result<Scenario> {
    load_scenario(cli)?.ok_or_else(|| Error::config("--scenario", format!("required {what}")))
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    Ok(cli.out.join(name))
}

fn written(path: &Path) {
    println!("wrote {}", path.display());
}

fn write_rendered(cli: &Cli, r: &Rendered, wav: &str, labels: &str) -> Result<()> {
    let wav = out_path(cli, wav)?;
    formats::write_wav(&wav, r.pcm.sample_rate, &r.pcm.samples)?;
    written(&wav);
    let labels = out_path(cli, labels)?;
    formats::write_labels(&labels, &r.labels)?;
    written(&labels);
    Ok(())
}

fn render_scenario(sc: &Scenario) -> Result<Rendered> {
    pipeline::render(&sc.simulate()?, &sc.synth_config())
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate => {
            let sc = require_scenario(cli, "for simulate")?;
            let trace = sc.simulate()?;
            let path = out_path(cli, "trace.csv")?;
            formats::write_trace(&path, &trace)?;
            print!("{}", simulation_summary(&sc, &trace));
            written(&path);
            Ok(Outcome::Clean)
        }
        Command::Synth { trace } => {
            let sc = require_scenario(cli, "for synth")?;
            let trace = match trace {
                Some(p) => {
                    let trace = formats::read_trace(p)?;
                    check_trace(&sc, &trace)?;
                    trace
                }
                None => sc.simulate()?,
            };
            let r = pipeline::render(&trace, &sc.synth_config())?;
            write_rendered(cli, &r, "audio.wav", "labels.csv")?;
            Ok(Outcome::Clean)
        }
        Command::Train { wav } => {
            let sc = load_scenario(cli)?;
            if sc.as_ref().is_some_and(|s| s.attacks.has_attacks()) {
                eprintln!(
                    "warning: the training scenario schedules attacks; profiles assume attack-free audio"
                );
            }
            let pcm = match (wav, &sc) {
                (Some(p), _) => formats::read_wav(p)?,
                (None, Some(sc)) => render_scenario(sc)?.pcm,
                (None, None) => return Err(Error::config("--wav", "train needs --wav or --scenario")),
            };
            let frames = sc.as_ref().map_or_else(FrameSpec::default, |s| s.frames);
            let training = pipeline::train(&pcm, frames, &default_bands())?;
            let path = out_path(cli, "profiles.json")?;
            formats::save_db(&path, &training.db)?;
            written(&path);
            Ok(Outcome::Clean)
        }
        Command::Detect { db, wav, z_threshold } => {
            let sc = load_scenario(cli)?;
            let db = formats::load_db(db)?;
            if let Some(sc) = &sc {
                if sc.frames != db.frame_spec {
                    return Err(Error::Mismatch(format!(
                        "scenario frames {:?} differ from the profile database's {:?}",
                        sc.frames, db.frame_spec
                    )));
                }
            }
            let pcm = match (wav, &sc) {
                (Some(p), _) => formats::read_wav(p)?,
                (None, Some(sc)) => render_scenario(sc)?.pcm,
                (None, None) => return Err(Error::config("--wav", "detect needs --wav or --scenario")),
            };
            let mut cfg = sc.as_ref().map_or_else(DetectionConfig::default, |s| s.detect);
            if let Some(z) = z_threshold {
                cfg.z_threshold = *z;
            }
            cfg.validate()
                .map_err(|e| Error::config("detect", e.to_string()))?;
            detect_and_report(cli, &pcm, &db, &cfg, sc.as_ref())
        }
        Command::Spectra { wav, labels, frame } => {
            let sc = load_scenario(cli)?;
            let frames = sc.as_ref().map_or_else(FrameSpec::default, |s| s.frames);
            let (pcm, labels) = match (wav, labels, &sc) {
                (Some(w), Some(l), _) => (formats::read_wav(w)?, formats::read_labels(l)?),
                (None, _, Some(sc)) => {
                    let r = render_scenario(sc)?;
                    (r.pcm, r.labels)
                }
                _ => {
                    return Err(Error::config(
                        "--wav",
                        "spectra needs --wav with --labels, or --scenario",
                    ))
                }
            };
            for cs in pipeline::class_spectra(&pcm, &labels, frames)? {
                let path = out_path(cli, &format!("spectrum_{}.csv", cs.state.name()))?;
                formats::write_spectrum(&path, &cs.freqs, &cs.power_db)?;
                written(&path);
            }
            if let Some(index) = frame {
                let ps = pipeline::frame_spectrum(&pcm, frames, *index)?;
                let freqs: Vec<f64> = (0..ps.bins.len()).map(|k| ps.freq(k)).collect();
                let path = out_path(cli, &format!("frame_{index}.csv"))?;
                formats::write_spectrum(&path, &freqs, &ps.bins)?;
                written(&path);
            }
            Ok(Outcome::Clean)
        }
        Command::E2e => {
            let sc = require_scenario(cli, "for e2e")?;
            let train_sc = sc.without_attacks();
            let train_trace = train_sc.simulate()?;
            formats::write_trace(&out_path(cli, "train_trace.csv")?, &train_trace)?;
            let train_audio = pipeline::render(&train_trace, &train_sc.synth_config())?;
            write_rendered(cli, &train_audio, "train.wav", "train_labels.csv")?;
            let training = pipeline::train(&train_audio.pcm, train_sc.frames, &default_bands())?;
            let db_path = out_path(cli, "profiles.json")?;
            formats::save_db(&db_path, &training.db)?;
            written(&db_path);

            let test_sc = sc.with_seed(sc.synth.seed.wrapping_add(1));
            let trace = test_sc.simulate()?;
            let trace_path = out_path(cli, "trace.csv")?;
            formats::write_trace(&trace_path, &trace)?;
            written(&trace_path);
            let audio = pipeline::render(&trace, &test_sc.synth_config())?;
            write_rendered(cli, &audio, "audio.wav", "labels.csv")?;
            detect_and_report(cli, &audio.pcm, &training.db, &test_sc.detect, Some(&test_sc))
        }
    }
}

fn simulation_summary(sc: &Scenario, trace: &[pumpguard_core::TelemetryFrame]) -> String {
    use pumpguard_core::process::episodes;
    let mut out = String::new();
    let cycles = episodes(trace, |s| s.pump_on).len();
    let dry = episodes(trace, |s| s.pump_dry).len();
    out.push_str(&format!(
        "simulated {} ticks ({:.1} s): {} pump cycles, {} dry-running episodes\n",
        trace.len(),
        trace.last().map_or(0.0, |f| f.t),
        cycles,
        dry
    ));
    for w in &sc.attacks.pump_override {
        out.push_str(&format!("pump override [{:.1}, {:.1}) s\n", w.start, w.end));
    }
    for w in &sc.attacks.valve_open {
        out.push_str(&format!("valve open    [{:.1}, {:.1}) s\n", w.start, w.end));
    }
    if sc.attacks.spoof_telemetry {
        out.push_str("telemetry spoofed\n");
    }
    out
}

/// A trace read from disk must come from the scenario's clock.
fn check_trace(sc: &Scenario, trace: &[pumpguard_core::TelemetryFrame]) -> Result<()> {
    let dt = sc.process.dt;
    let ticks = sc.process.tick_count(sc.duration_s);
    let last = trace.last().map_or(0.0, |f| f.t);
    if trace.len() != ticks || (last - ticks as f64 * dt).abs() > 1e-6 * last.max(1.0) {
        return Err(Error::Mismatch(format!(
            "trace has {} ticks ending at {last} s; scenario expects {ticks} ticks of {dt} s",
            trace.len()
        )));
    }
    Ok(())
}

fn detect_and_report(
    cli: &Cli,
    pcm: &Pcm,
    db: &pumpguard_core::ProfileDb,
    cfg: &DetectionConfig,
    sc: Option<&Scenario>,
) -> Result<Outcome> {
    let detection = pipeline::detect(pcm, db, cfg)?;
    let alerts_path = out_path(cli, "alerts.csv")?;
    formats::write_alerts(&alerts_path, &detection.alerts)?;
    let mut report = RunReport::new(&detection, db.sample_rate, db.frame_spec.frame_len, db.frame_spec.hop);
    if let Some(sc) = sc {
        report = report.with_truth(truth_events(sc));
    }
    let text = report.to_string();
    let report_path = out_path(cli, "report.txt")?;
    std::fs::write(&report_path, &text).map_err(|e| Error::io(&report_path, e))?;
    print!("{text}");
    written(&alerts_path);
    written(&report_path);
    Ok(if detection.alerts.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Alerts
    })
}
