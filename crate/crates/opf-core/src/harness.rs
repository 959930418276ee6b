//! Experiment runner: scenario in, per-frame result log and CSV out.
//!
//! A run is fully described by a [`RunConfig`]. One master seed drives
//! everything: the scenario's measurement noise stream and each object's
//! filter stream are forked from it in a fixed order, so a config repeated
//! verbatim reproduces its CSV byte for byte, and changing the seed changes
//! the noise but never the scripted ground truth.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{Ensemble, FilterKind, OpConfig, StepOutput};
use crate::error::{Error, Result};
use crate::feedback::{FeedbackConfig, SafetyMonitor};
use crate::filter::NoiseModel;
use crate::pose::{Portion, Pose6Dof};
use crate::report::{error_distance, RunMetrics};
use crate::scenario::{builtin_scenario, generate_frame, NoiseSpec, ScenarioSpec};

/// Where the scenario comes from.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    /// One of the shipped scenarios, by name.
    Builtin(String),
    /// A scenario document on disk.
    Path(PathBuf),
    /// An already-built spec (tests, embedding).
    Inline(ScenarioSpec),
}

/// Filter-side noise knobs, distinct from the scenario's sensor noise.
/// `None` fields are derived from the scenario when the run starts.
#[derive(Debug, Clone, Default)]
pub struct FilterNoise {
    /// Process noise std per translation component (m/frame).
    pub process_sigma_t: Option<f64>,
    /// Process noise std per rotation component (rad/frame).
    pub process_sigma_r: Option<f64>,
    /// Measurement noise std assumed by the filter, translation (m).
    pub measurement_sigma_t: Option<f64>,
    /// Measurement noise std assumed by the filter, rotation (rad).
    pub measurement_sigma_r: Option<f64>,
    /// Initial particle spread, translation (m).
    pub init_spread_t: Option<f64>,
    /// Initial particle spread, rotation (rad).
    pub init_spread_r: Option<f64>,
}

impl FilterNoise {
    /// Concrete noise model for a scenario. The measurement stds default to
    /// the scenario's sensor noise (floored away from zero so noiseless
    /// scenes still yield a proper likelihood); the process stds default to
    /// values wide enough to follow the builtin scenes' fastest motions.
    fn resolve(&self, scenario_noise: &NoiseSpec) -> Result<NoiseModel> {
        let meas_t = self
            .measurement_sigma_t
            .unwrap_or_else(|| scenario_noise.sigma_t.max(1e-3));
        let meas_r = self
            .measurement_sigma_r
            .unwrap_or_else(|| scenario_noise.sigma_r.max(2e-3));
        let proc_t = self.process_sigma_t.unwrap_or(0.008);
        let proc_r = self.process_sigma_r.unwrap_or(0.03);
        NoiseModel::isotropic(proc_t, proc_r, meas_t, meas_r)
    }

    fn init_spreads(&self) -> (f64, f64) {
        (
            self.init_spread_t.unwrap_or(0.01),
            self.init_spread_r.unwrap_or(0.02),
        )
    }
}

/// Everything needed to reproduce one experiment run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    pub filter: FilterKind,
    pub seed: u64,
    /// Particles per portion (each object runs this many twice over).
    pub particles: usize,
    pub op: OpConfig,
    pub feedback: FeedbackConfig,
    /// Alert threshold; `None` calibrates to 100x the steady visible trace.
    pub epsilon_safe: Option<f64>,
    /// Replaces the scenario's sensor noise block when set.
    pub noise_override: Option<NoiseSpec>,
    pub filter_noise: FilterNoise,
}

impl RunConfig {
    pub fn new(scenario: ScenarioSource, filter: FilterKind, seed: u64) -> Self {
        Self {
            scenario,
            filter,
            seed,
            particles: 5000,
            op: OpConfig::default(),
            feedback: FeedbackConfig::default(),
            epsilon_safe: None,
            noise_override: None,
            filter_noise: FilterNoise::default(),
        }
    }
}

/// One CSV row: everything known about one hypothesis at one frame, plus
/// in-memory diagnostics that are not serialized.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub frame: u64,
    pub object_id: String,
    pub hypothesis: u8,
    pub truth: Pose6Dof,
    pub estimate: Pose6Dof,
    /// True when the measurement was missing this frame.
    pub occluded: bool,
    /// The object geometrically blocking this one (simulator truth).
    pub occluder_id: Option<String>,
    pub trace_q: f64,
    /// Latched alert level this frame.
    pub alert: bool,
    // Diagnostics carried in memory for analysis and tests.
    pub measurement: Option<Pose6Dof>,
    pub virtual_measurement: Option<Pose6Dof>,
    /// Occluder the filter chose to follow (may differ from simulator truth).
    pub followed_occluder: Option<String>,
    pub inflation_step: f64,
    pub velocity: f64,
    pub cumulative_scale: f64,
}

/// Full record of one run.
#[derive(Debug, Clone)]
pub struct ResultLog {
    pub scenario_name: String,
    pub filter: FilterKind,
    pub seed: u64,
    pub frame_rate: f64,
    pub epsilon_safe: f64,
    /// The reported subject: the scenario's first object.
    pub subject_id: String,
    pub rows: Vec<ResultRow>,
}

impl ResultLog {
    /// Rows of one hypothesis of one object, in frame order.
    pub fn track(&self, object_id: &str, hypothesis: u8) -> Vec<&ResultRow> {
        self.rows
            .iter()
            .filter(|r| r.object_id == object_id && r.hypothesis == hypothesis)
            .collect()
    }

    /// Headline metrics over the subject's primary hypothesis.
    pub fn subject_metrics(&self) -> Result<RunMetrics> {
        let track = self.track(&self.subject_id, 0);
        let estimates: Vec<Pose6Dof> = track.iter().map(|r| r.estimate).collect();
        let truth: Vec<Pose6Dof> = track.iter().map(|r| r.truth).collect();
        Ok(RunMetrics {
            filter: self.filter,
            seed: self.seed,
            translation_error: error_distance(&estimates, &truth, Portion::Translation)?,
            rotation_error: error_distance(&estimates, &truth, Portion::Rotation)?,
        })
    }
}

/// Resolves a scenario source to a named, validated spec.
pub fn load_scenario(source: &ScenarioSource) -> Result<(String, ScenarioSpec)> {
    match source {
        ScenarioSource::Builtin(name) => {
            let spec = builtin_scenario(name).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown builtin scenario {name:?} (available: {})",
                    crate::scenario::BUILTIN_NAMES.join(", ")
                ))
            })?;
            Ok((name.clone(), spec))
        }
        ScenarioSource::Path(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidConfig(format!("cannot read scenario {}: {e}", path.display()))
            })?;
            let spec = ScenarioSpec::from_json(&text)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            Ok((name, spec))
        }
        ScenarioSource::Inline(spec) => {
            spec.validate()?;
            Ok(("inline".into(), spec.clone()))
        }
    }
}

/// Runs one experiment: simulates every frame, steps the chosen filter,
/// and records one row per live hypothesis per frame.
pub fn run_experiment(cfg: &RunConfig) -> Result<ResultLog> {
    let (scenario_name, mut spec) = load_scenario(&cfg.scenario)?;
    if let Some(noise) = &cfg.noise_override {
        spec.noise = noise.clone();
        spec.validate()?;
    }
    if cfg.particles == 0 {
        return Err(Error::InvalidConfig("particle count must be > 0".into()));
    }
    cfg.feedback.validate()?;

    let noise_model = cfg.filter_noise.resolve(&spec.noise)?;
    let (spread_t, spread_r) = cfg.filter_noise.init_spreads();
    let epsilon_safe = cfg
        .epsilon_safe
        .unwrap_or_else(|| 100.0 * noise_model.effective_combined().trace());

    // One master stream; forks in fixed order: scenario first, then one
    // per object in scenario order.
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scenario_seed: u64 = master.random();
    let mut scenario_rng = ChaCha8Rng::seed_from_u64(scenario_seed);

    let mut ensemble = Ensemble::new(cfg.op.clone(), cfg.filter, spec.frame_rate)?;
    for obj in &spec.objects {
        let object_seed: u64 = master.random();
        let initial = crate::scenario::object_pose_at(obj, 0.0);
        ensemble.add_object(
            &obj.id,
            &initial,
            cfg.particles,
            spread_t,
            spread_r,
            noise_model.clone(),
            object_seed,
        )?;
    }

    let subject_id = spec.objects[0].id.clone();
    let mut monitors: HashMap<(String, u8), SafetyMonitor> = HashMap::new();
    let mut rows = Vec::new();

    for frame in 0..spec.frame_count() {
        let sim = generate_frame(&spec, frame, &mut scenario_rng)?;
        let measurements: Vec<(String, Option<Pose6Dof>)> = sim
            .entries
            .iter()
            .map(|e| (e.id.clone(), e.measurement))
            .collect();
        let outputs = ensemble.step_frame(frame, &measurements)?;

        let mut live: Vec<(String, u8)> = Vec::with_capacity(outputs.len());
        for out in &outputs {
            let entry = sim
                .entries
                .iter()
                .find(|e| e.id == out.id)
                .expect("ensemble objects mirror the scenario");
            let key = (out.id.clone(), out.hypothesis);
            let monitor = monitors
                .entry(key.clone())
                .or_insert_with(|| SafetyMonitor::new(epsilon_safe).expect("validated above"));
            monitor.observe(out.trace_q);
            live.push(key);
            rows.push(result_row(frame, entry, out, monitor.is_alert()));
        }
        // A destroyed clone's monitor must not leak its latch into a future
        // clone of the same object.
        monitors.retain(|key, _| live.contains(key));
    }

    Ok(ResultLog {
        scenario_name,
        filter: cfg.filter,
        seed: cfg.seed,
        frame_rate: spec.frame_rate,
        epsilon_safe,
        subject_id,
        rows,
    })
}

fn result_row(
    frame: u64,
    entry: &crate::scenario::FrameEntry,
    out: &StepOutput,
    alert: bool,
) -> ResultRow {
    ResultRow {
        frame,
        object_id: out.id.clone(),
        hypothesis: out.hypothesis,
        truth: entry.truth,
        estimate: out.estimate,
        occluded: out.occluded,
        occluder_id: entry.occluder.clone(),
        trace_q: out.trace_q,
        alert,
        measurement: out.measurement,
        virtual_measurement: out.virtual_measurement,
        followed_occluder: out.occluder.clone(),
        inflation_step: out.inflation_step,
        velocity: out.velocity,
        cumulative_scale: out.cumulative_scale,
    }
}

/// The fixed CSV column set.
pub const CSV_HEADER: &str = "frame,object_id,hypothesis,gt_tx,gt_ty,gt_tz,gt_th,gt_ph,gt_ps,\
est_tx,est_ty,est_tz,est_th,est_ph,est_ps,occluded,occluder_id,trace_q,alert";

/// Serializes a float with 9 significant digits, deterministically.
pub fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Writes the run log as CSV with the fixed schema.
pub fn write_csv<W: Write>(log: &ResultLog, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &log.rows {
        let gt = &r.truth;
        let est = &r.estimate;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.frame,
            r.object_id,
            r.hypothesis,
            fmt9(gt.translation.x),
            fmt9(gt.translation.y),
            fmt9(gt.translation.z),
            fmt9(gt.rotation.x),
            fmt9(gt.rotation.y),
            fmt9(gt.rotation.z),
            fmt9(est.translation.x),
            fmt9(est.translation.y),
            fmt9(est.translation.z),
            fmt9(est.rotation.x),
            fmt9(est.rotation.y),
            fmt9(est.rotation.z),
            u8::from(r.occluded),
            r.occluder_id.as_deref().unwrap_or(""),
            fmt9(r.trace_q),
            u8::from(r.alert),
        )?;
    }
    Ok(())
}

/// Runs one experiment and writes its CSV to `path`.
pub fn run_to_csv(cfg: &RunConfig, path: &Path) -> Result<ResultLog> {
    let log = run_experiment(cfg)?;
    let file = std::fs::File::create(path)?;
    write_csv(&log, std::io::BufWriter::new(file))?;
    Ok(log)
}

/// Renders a log to an in-memory CSV string.
pub fn csv_string(log: &ResultLog) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(log, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is ASCII"))
}
