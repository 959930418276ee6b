//! Per-object occlusion state machine and the multi-object frame step.
//!
//! Every tracked object runs the same predict/update cycle. While its
//! measurement is present the update is a plain particle-filter reweight.
//! When the measurement disappears under the object-permanence filter, the
//! update step substitutes a virtual measurement chosen by the occlusion
//! state machine:
//!
//! * an object that was *moving* at occlusion onset follows a first-order
//!   motion model fitted to its last visible window (frozen for the whole
//!   episode so extrapolation never feeds on itself);
//! * an object that was *static* follows the pose of its inferred occluder
//!   frame by frame (the cups-game behaviour), re-selecting the occluder
//!   each frame from a consistent start-of-frame snapshot;
//! * two statistically indistinguishable occluder candidates fork a clone
//!   hypothesis that follows the runner-up until the real measurement
//!   settles the ambiguity.
//!
//! Each occluded frame multiplies the measurement covariance by
//! `kappa^v` (v in m/s), so the reported uncertainty grows with how fast
//! the hidden object is believed to move; reappearance resets the scale in
//! a single frame. The standard filter used as a baseline skips the update
//! entirely while the measurement is missing.

use std::collections::HashMap;

use nalgebra::{Matrix6, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filter::{
    effective_sample_size, estimate, init_particles, predict, resample, update_weights, NoiseModel,
    ParticlePair,
};
use crate::motion::{
    classify_motion, fit_motion_model, predict_virtual_measurement, Motion, MotionModel,
};
use crate::occluder::{select_occluder, GaussianSummary, OccluderSelection};
use crate::pose::{Portion, Pose6Dof, TrajectoryBuffer};

/// History window length H (frames) for motion classification and fitting.
pub const DEFAULT_HISTORY_LEN: usize = 50;
/// Static/moving translation threshold (metres) over the window.
pub const DEFAULT_STATIC_TRANSLATION_EPS: f64 = 0.01;
/// Static/moving rotation threshold (radians) over the window.
pub const DEFAULT_STATIC_ROTATION_EPS: f64 = 0.5;
/// Bhattacharyya gap below which two occluder candidates are ambiguous.
pub const DEFAULT_OCCLUDER_GAP: f64 = 0.01;
/// Per-frame covariance inflation base kappa.
pub const DEFAULT_INFLATION_BASE: f64 = 1.03;
/// Frames of history used to smooth velocity estimates for the inflation
/// exponent; longer windows keep estimator jitter out of flat episodes.
pub const VELOCITY_WINDOW: usize = 8;

/// Which update rule runs when a measurement is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    /// Plain particle filter: missing measurement means no update.
    Standard,
    /// Object-permanence filter: virtual measurements plus inflation.
    ObjectPermanence,
}

/// Tuning constants of the object-permanence update step.
#[derive(Debug, Clone)]
pub struct OpConfig {
    pub history_len: usize,
    pub static_translation_eps: f64,
    pub static_rotation_eps: f64,
    pub occluder_gap: f64,
    pub inflation_base: f64,
}

impl Default for OpConfig {
    fn default() -> Self {
        Self {
            history_len: DEFAULT_HISTORY_LEN,
            static_translation_eps: DEFAULT_STATIC_TRANSLATION_EPS,
            static_rotation_eps: DEFAULT_STATIC_ROTATION_EPS,
            occluder_gap: DEFAULT_OCCLUDER_GAP,
            inflation_base: DEFAULT_INFLATION_BASE,
        }
    }
}

impl OpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history_len < 2 {
            return Err(Error::InvalidConfig("history_len must be >= 2".into()));
        }
        if self.static_translation_eps <= 0.0 || self.static_rotation_eps <= 0.0 {
            return Err(Error::InvalidConfig(
                "static thresholds must be positive".into(),
            ));
        }
        if self.occluder_gap < 0.0 {
            return Err(Error::InvalidConfig("occluder_gap must be >= 0".into()));
        }
        if self.inflation_base <= 1.0 {
            return Err(Error::InvalidConfig(
                "inflation_base must be greater than 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-frame covariance inflation factor `kappa^v` for an object moving at
/// `velocity` metres per second.
pub fn uncertainty_scale(velocity: f64, base: f64) -> f64 {
    base.powf(velocity)
}

/// Why and how an object is currently occluded.
#[derive(Debug, Clone)]
pub enum OcclusionVariant {
    Visible,
    /// Static object following an inferred occluder; `None` means no
    /// candidate existed and the filter holds the last pose instead.
    OccludedStatic {
        occluder: Option<String>,
    },
    /// Moving object extrapolating a frozen motion model.
    OccludedMoving {
        model: MotionModel,
    },
    /// Two candidates were indistinguishable at fork time.
    OccludedAmbiguous {
        occluders: (String, String),
    },
}

/// Occlusion bookkeeping for one hypothesis.
#[derive(Debug, Clone)]
pub struct OcclusionStatus {
    pub variant: OcclusionVariant,
    /// Frame at which the current occlusion episode began.
    pub occluded_since: u64,
    /// Cumulative inflation alpha; exactly 1 while visible.
    pub cumulative_scale: f64,
}

impl OcclusionStatus {
    pub fn visible() -> Self {
        Self {
            variant: OcclusionVariant::Visible,
            occluded_since: 0,
            cumulative_scale: 1.0,
        }
    }

    pub fn is_occluded(&self) -> bool {
        !matches!(self.variant, OcclusionVariant::Visible)
    }
}

/// One tracked hypothesis: a primary object or its virtual clone.
#[derive(Debug, Clone)]
pub struct TrackedObject {
    pub id: String,
    /// 0 for the primary hypothesis, 1 for a live clone.
    pub hypothesis: u8,
    pub is_virtual_clone: bool,
    pub particles: ParticlePair,
    /// Posterior means, one entry per processed frame.
    pub history: TrajectoryBuffer,
    pub status: OcclusionStatus,
    pub noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl TrackedObject {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        initial: &Pose6Dof,
        particles: usize,
        init_spread_translation: f64,
        init_spread_rotation: f64,
        noise: NoiseModel,
        history_len: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pair = init_particles(
            initial,
            particles,
            init_spread_translation,
            init_spread_rotation,
            &mut rng,
        )?;
        Ok(Self {
            id: id.into(),
            hypothesis: 0,
            is_virtual_clone: false,
            particles: pair,
            history: TrajectoryBuffer::new(history_len)?,
            status: OcclusionStatus::visible(),
            noise,
            rng,
        })
    }

    /// Smoothed translation speed (m/s) from recent posterior means.
    fn recent_speed(&self, frame_rate: f64) -> f64 {
        let steps = VELOCITY_WINDOW.min(self.history.len().saturating_sub(1));
        if steps == 0 {
            return 0.0;
        }
        let newest = self.history.nth_back(0).expect("non-empty");
        let oldest = self.history.nth_back(steps).expect("length checked");
        let dist = (newest.1.translation - oldest.1.translation).norm();
        dist / steps as f64 * frame_rate
    }

    /// Moment-matched Gaussian of the translation cloud.
    fn translation_summary(&self) -> GaussianSummary {
        GaussianSummary::new(
            self.particles.translation.weighted_mean(),
            self.particles.translation.weighted_covariance(),
        )
    }

    /// Best current pose guess without consuming randomness: the last
    /// posterior mean, or the cloud estimate before any frame ran.
    fn last_pose(&self) -> Pose6Dof {
        match self.history.last() {
            Some((_, pose)) => *pose,
            None => estimate(&self.particles).0,
        }
    }
}

/// Result of stepping one hypothesis for one frame.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub id: String,
    pub hypothesis: u8,
    pub estimate: Pose6Dof,
    pub covariance: Matrix6<f64>,
    /// True when the object's measurement was missing this frame.
    pub occluded: bool,
    /// Occluder this hypothesis followed this frame, if any.
    pub occluder: Option<String>,
    /// Trace of the combined effective measurement covariance.
    pub trace_q: f64,
    pub cumulative_scale: f64,
    /// Inflation applied this frame (`kappa^v`; 1 while visible).
    pub inflation_step: f64,
    /// Velocity (m/s) that produced `inflation_step`.
    pub velocity: f64,
    /// Virtual measurement fed to the update, when one was substituted.
    pub virtual_measurement: Option<Pose6Dof>,
    /// Real measurement consumed, when present.
    pub measurement: Option<Pose6Dof>,
}

// Start-of-frame view of one hypothesis, shared by every selection this
// frame so results do not depend on object processing order.
struct SnapshotEntry {
    id: String,
    hypothesis: u8,
    summary: GaussianSummary,
    last_pose: Pose6Dof,
    speed: f64,
}

// What the object-permanence planner decided for one occluded hypothesis.
struct OpPlan {
    virtual_measurement: Pose6Dof,
    velocity: f64,
    occluder: Option<String>,
    new_variant: Option<OcclusionVariant>,
    onset: bool,
    fork_against: Option<(String, String)>,
}

// State saved before the primary's occluded update so a spawned clone can
// run its own update for the same frame from identical conditions.
struct ForkState {
    particles: ParticlePair,
    history: TrajectoryBuffer,
    status: OcclusionStatus,
    noise: NoiseModel,
    second: String,
}

struct Entry {
    primary: TrackedObject,
    clone: Option<TrackedObject>,
}

/// A set of tracked objects advancing in lockstep, one frame at a time.
pub struct Ensemble {
    entries: Vec<Entry>,
    cfg: OpConfig,
    kind: FilterKind,
    frame_rate: f64,
}

impl Ensemble {
    pub fn new(cfg: OpConfig, kind: FilterKind, frame_rate: f64) -> Result<Self> {
        cfg.validate()?;
        if !frame_rate.is_finite() || frame_rate <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        Ok(Self {
            entries: Vec::new(),
            cfg,
            kind,
            frame_rate,
        })
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn config(&self) -> &OpConfig {
        &self.cfg
    }

    /// Registers a primary object with its own deterministic RNG stream.
    #[allow(clippy::too_many_arguments)]
    pub fn add_object(
        &mut self,
        id: impl Into<String>,
        initial: &Pose6Dof,
        particles: usize,
        init_spread_translation: f64,
        init_spread_rotation: f64,
        noise: NoiseModel,
        seed: u64,
    ) -> Result<()> {
        let id = id.into();
        if self.entries.iter().any(|e| e.primary.id == id) {
            return Err(Error::InvalidConfig(format!("duplicate object id {id:?}")));
        }
        let object = TrackedObject::new(
            id,
            initial,
            particles,
            init_spread_translation,
            init_spread_rotation,
            noise,
            self.cfg.history_len,
            seed,
        )?;
        self.entries.push(Entry {
            primary: object,
            clone: None,
        });
        Ok(())
    }

    /// All live hypotheses, primaries first within each object.
    pub fn hypotheses(&self) -> impl Iterator<Item = &TrackedObject> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::once(&e.primary).chain(e.clone.as_ref()))
    }

    pub fn object(&self, id: &str) -> Option<&TrackedObject> {
        self.entries
            .iter()
            .find(|e| e.primary.id == id)
            .map(|e| &e.primary)
    }

    pub fn hypothesis_count(&self, id: &str) -> usize {
        self.entries
            .iter()
            .find(|e| e.primary.id == id)
            .map(|e| 1 + usize::from(e.clone.is_some()))
            .unwrap_or(0)
    }

    /// Advances every hypothesis by one frame. `measurements` must carry
    /// exactly one entry per registered object; unknown ids, duplicates or
    /// non-finite poses reject the whole frame.
    pub fn step_frame(
        &mut self,
        frame: u64,
        measurements: &[(String, Option<Pose6Dof>)],
    ) -> Result<Vec<StepOutput>> {
        if self.entries.is_empty() {
            return Err(Error::InvalidConfig("ensemble has no objects".into()));
        }
        let lookup = self.validate_measurements(measurements)?;
        let snapshot = self.snapshot();

        let mut outputs = Vec::with_capacity(self.entries.len());
        for entry in &mut self.entries {
            let measurement = lookup
                .get(entry.primary.id.as_str())
                .copied()
                .expect("validated above");

            // Reappearance settles any open ambiguity: the clone dies on the
            // spot and only the primary is re-anchored to the measurement.
            if measurement.is_some() && entry.clone.is_some() {
                entry.clone = None;
            }

            let clone_exists = entry.clone.is_some();
            let (out, fork) = Self::step_object(
                &mut entry.primary,
                frame,
                measurement,
                &snapshot,
                &lookup,
                &self.cfg,
                self.kind,
                self.frame_rate,
                clone_exists,
                None,
                false,
            )?;
            outputs.push(out);

            if let Some(fork) = fork {
                let mut clone = Self::make_clone(&mut entry.primary, fork, &self.cfg)?;
                let forced = clone_forced_occluder(&clone);
                let (out, _) = Self::step_object(
                    &mut clone,
                    frame,
                    None,
                    &snapshot,
                    &lookup,
                    &self.cfg,
                    self.kind,
                    self.frame_rate,
                    true,
                    forced.as_deref(),
                    true, // the forked state is already predicted this frame
                )?;
                outputs.push(out);
                entry.clone = Some(clone);
            } else if let Some(clone) = entry.clone.as_mut() {
                let (out, _) = Self::step_object(
                    clone,
                    frame,
                    None,
                    &snapshot,
                    &lookup,
                    &self.cfg,
                    self.kind,
                    self.frame_rate,
                    true,
                    None,
                    false,
                )?;
                outputs.push(out);
            }
        }
        Ok(outputs)
    }

    fn validate_measurements<'a>(
        &self,
        measurements: &'a [(String, Option<Pose6Dof>)],
    ) -> Result<HashMap<&'a str, Option<&'a Pose6Dof>>> {
        let mut lookup: HashMap<&str, Option<&Pose6Dof>> = HashMap::new();
        for (id, pose) in measurements {
            if !self.entries.iter().any(|e| &e.primary.id == id) {
                return Err(Error::InvalidInput(format!(
                    "frame rejected: unknown object id {id:?}"
                )));
            }
            if let Some(p) = pose {
                if !p.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "frame rejected: non-finite measurement for {id:?}"
                    )));
                }
            }
            if lookup.insert(id.as_str(), pose.as_ref()).is_some() {
                return Err(Error::InvalidInput(format!(
                    "frame rejected: duplicate measurement for {id:?}"
                )));
            }
        }
        for entry in &self.entries {
            if !lookup.contains_key(entry.primary.id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "frame rejected: no measurement entry for {:?}",
                    entry.primary.id
                )));
            }
        }
        Ok(lookup)
    }

    // Start-of-frame beliefs for every hypothesis (read barrier: selections
    // this frame all see last frame's state).
    fn snapshot(&self) -> Vec<SnapshotEntry> {
        self.hypotheses()
            .map(|obj| SnapshotEntry {
                id: obj.id.clone(),
                hypothesis: obj.hypothesis,
                summary: obj.translation_summary(),
                last_pose: obj.last_pose(),
                speed: obj.recent_speed(self.frame_rate),
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn step_object(
        obj: &mut TrackedObject,
        frame: u64,
        measurement: Option<&Pose6Dof>,
        snapshot: &[SnapshotEntry],
        current: &HashMap<&str, Option<&Pose6Dof>>,
        cfg: &OpConfig,
        kind: FilterKind,
        frame_rate: f64,
        clone_exists: bool,
        forced_occluder: Option<&str>,
        skip_predict: bool,
    ) -> Result<(StepOutput, Option<ForkState>)> {
        if !skip_predict {
            let zero = Vector3::zeros();
            let r_t = *obj.noise.process(Portion::Translation);
            let r_r = *obj.noise.process(Portion::Rotation);
            predict(&mut obj.particles.translation, &zero, &r_t, &mut obj.rng)?;
            predict(&mut obj.particles.rotation, &zero, &r_r, &mut obj.rng)?;
        }

        let mut fork = None;
        let mut occluded = false;
        let mut occluder = None;
        let mut inflation_step = 1.0;
        let mut velocity = 0.0;
        let mut virtual_measurement = None;

        match measurement {
            Some(y) => {
                obj.status = OcclusionStatus::visible();
                obj.noise.scale = 1.0;
                Self::apply_update(obj, y)?;
            }
            None => {
                occluded = true;
                if kind == FilterKind::ObjectPermanence {
                    let plan = Self::op_update_step(
                        obj,
                        frame,
                        snapshot,
                        current,
                        cfg,
                        frame_rate,
                        clone_exists,
                        forced_occluder,
                    );

                    if let Some((_, second)) = &plan.fork_against {
                        fork = Some(ForkState {
                            particles: obj.particles.clone(),
                            history: obj.history.clone(),
                            status: obj.status.clone(),
                            noise: obj.noise.clone(),
                            second: second.clone(),
                        });
                    }

                    if plan.onset {
                        obj.status.occluded_since = frame;
                    }
                    if let Some(variant) = plan.new_variant {
                        obj.status.variant = variant;
                    }
                    inflation_step = uncertainty_scale(plan.velocity, cfg.inflation_base);
                    obj.status.cumulative_scale *= inflation_step;
                    obj.noise.scale = obj.status.cumulative_scale;
                    velocity = plan.velocity;
                    occluder = plan.occluder;

                    Self::apply_update(obj, &plan.virtual_measurement)?;
                    virtual_measurement = Some(plan.virtual_measurement);
                }
                // FilterKind::Standard: no measurement, no update.
            }
        }

        let (pose, covariance) = estimate(&obj.particles);
        obj.history.push(frame, pose)?;

        let output = StepOutput {
            id: obj.id.clone(),
            hypothesis: obj.hypothesis,
            estimate: pose,
            covariance,
            occluded,
            occluder,
            trace_q: obj.noise.effective_combined().trace(),
            cumulative_scale: obj.status.cumulative_scale,
            inflation_step,
            velocity,
            virtual_measurement,
            measurement: measurement.copied(),
        };
        Ok((output, fork))
    }

    /// The object-permanence update plan for one occluded hypothesis
    /// (Alg. dynamics module first, then the occluder module). Any internal
    /// failure degrades to a last-pose hold so tracking never stops.
    #[allow(clippy::too_many_arguments)]
    fn op_update_step(
        obj: &TrackedObject,
        frame: u64,
        snapshot: &[SnapshotEntry],
        current: &HashMap<&str, Option<&Pose6Dof>>,
        cfg: &OpConfig,
        frame_rate: f64,
        clone_exists: bool,
        forced_occluder: Option<&str>,
    ) -> OpPlan {
        let onset = !obj.status.is_occluded();

        // Dynamics module: the regime is decided once per episode, from the
        // last visible window. Re-deciding on virtual history would fit
        // models to our own predictions.
        if onset {
            let motion = classify_motion(
                &obj.history,
                cfg.static_translation_eps,
                cfg.static_rotation_eps,
            );
            if motion == Motion::Moving {
                match fit_motion_model(&obj.history) {
                    Ok(model) => return Self::plan_moving(obj, frame, model, frame_rate, true),
                    Err(err) => {
                        log::warn!("{}: motion fit failed ({err}); holding last pose", obj.id);
                        return Self::plan_hold(obj, snapshot, true);
                    }
                }
            }
        } else if let OcclusionVariant::OccludedMoving { model } = &obj.status.variant {
            return Self::plan_moving(obj, frame, model.clone(), frame_rate, false);
        }

        // Occluder module.
        Self::plan_occluder_follow(
            obj,
            snapshot,
            current,
            cfg,
            clone_exists,
            forced_occluder,
            onset,
        )
    }

    fn plan_moving(
        obj: &TrackedObject,
        frame: u64,
        model: MotionModel,
        frame_rate: f64,
        onset: bool,
    ) -> OpPlan {
        let velocity = model.speed_per_frame() * frame_rate;
        match predict_virtual_measurement(&model, frame) {
            Ok(virtual_measurement) => OpPlan {
                virtual_measurement,
                velocity,
                occluder: None,
                new_variant: onset.then_some(OcclusionVariant::OccludedMoving { model }),
                onset,
                fork_against: None,
            },
            Err(err) => {
                log::warn!(
                    "{}: extrapolation failed ({err}); holding last pose",
                    obj.id
                );
                OpPlan {
                    virtual_measurement: obj.last_pose(),
                    velocity,
                    occluder: None,
                    new_variant: onset.then_some(OcclusionVariant::OccludedMoving { model }),
                    onset,
                    fork_against: None,
                }
            }
        }
    }

    fn plan_hold(obj: &TrackedObject, snapshot: &[SnapshotEntry], onset: bool) -> OpPlan {
        let own = snapshot
            .iter()
            .find(|s| s.id == obj.id && s.hypothesis == obj.hypothesis);
        OpPlan {
            virtual_measurement: own.map(|s| s.last_pose).unwrap_or_else(|| obj.last_pose()),
            velocity: own.map(|s| s.speed).unwrap_or(0.0),
            occluder: None,
            new_variant: onset.then_some(OcclusionVariant::OccludedStatic { occluder: None }),
            onset,
            fork_against: None,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn plan_occluder_follow(
        obj: &TrackedObject,
        snapshot: &[SnapshotEntry],
        current: &HashMap<&str, Option<&Pose6Dof>>,
        cfg: &OpConfig,
        clone_exists: bool,
        forced_occluder: Option<&str>,
        onset: bool,
    ) -> OpPlan {
        // Candidates are other primary objects; clone hypotheses are not
        // physical occluders.
        let candidates: Vec<&SnapshotEntry> = snapshot
            .iter()
            .filter(|s| s.hypothesis == 0 && s.id != obj.id)
            .collect();

        let chosen: Option<(usize, Option<usize>)> = if let Some(forced) = forced_occluder {
            candidates
                .iter()
                .position(|s| s.id == forced)
                .map(|i| (i, None))
        } else {
            let subject = snapshot
                .iter()
                .find(|s| s.id == obj.id && s.hypothesis == obj.hypothesis)
                .map(|s| s.summary.clone())
                .unwrap_or_else(|| obj.translation_summary());
            let summaries: Vec<GaussianSummary> =
                candidates.iter().map(|s| s.summary.clone()).collect();
            match select_occluder(&subject, &summaries, cfg.occluder_gap) {
                Ok(OccluderSelection::Single { index, .. }) => Some((index, None)),
                Ok(OccluderSelection::Multiple {
                    nearest, second, ..
                }) => Some((nearest, Some(second))),
                Err(err) => {
                    log::warn!("{}: occluder selection failed ({err}); holding", obj.id);
                    None
                }
            }
        };

        let Some((nearest, second)) = chosen else {
            return Self::plan_hold(obj, snapshot, onset);
        };
        let followed = candidates[nearest];

        // The occluder's live measurement is copied verbatim; if the
        // occluder is itself occluded, its last estimate stands in.
        let virtual_measurement = match current.get(followed.id.as_str()) {
            Some(Some(pose)) => **pose,
            _ => followed.last_pose,
        };

        // Fork only from a primary that has no live clone yet.
        let may_fork = !obj.is_virtual_clone && !clone_exists;
        let fork_against = match second {
            Some(second) if may_fork => Some((followed.id.clone(), candidates[second].id.clone())),
            _ => None,
        };

        let new_variant = if let Some((a, b)) = &fork_against {
            Some(OcclusionVariant::OccludedAmbiguous {
                occluders: (a.clone(), b.clone()),
            })
        } else if matches!(
            obj.status.variant,
            OcclusionVariant::OccludedAmbiguous { .. }
        ) && (clone_exists || obj.is_virtual_clone)
        {
            None // ambiguity persists until the measurement settles it
        } else {
            Some(OcclusionVariant::OccludedStatic {
                occluder: Some(followed.id.clone()),
            })
        };

        OpPlan {
            virtual_measurement,
            velocity: followed.speed,
            occluder: Some(followed.id.clone()),
            new_variant,
            onset,
            fork_against,
        }
    }

    fn apply_update(obj: &mut TrackedObject, y: &Pose6Dof) -> Result<()> {
        let n = obj.particles.translation.len() as f64;
        let q_t = obj.noise.effective_measurement(Portion::Translation);
        let q_r = obj.noise.effective_measurement(Portion::Rotation);
        update_weights(
            &mut obj.particles.translation,
            &y.translation,
            &q_t,
            Portion::Translation.innovation(),
        )?;
        update_weights(
            &mut obj.particles.rotation,
            &y.rotation,
            &q_r,
            Portion::Rotation.innovation(),
        )?;
        if effective_sample_size(&obj.particles.translation) < n / 2.0 {
            resample(&mut obj.particles.translation, &mut obj.rng);
        }
        if effective_sample_size(&obj.particles.rotation) < n / 2.0 {
            resample(&mut obj.particles.rotation, &mut obj.rng);
        }
        Ok(())
    }

    fn make_clone(
        primary: &mut TrackedObject,
        fork: ForkState,
        cfg: &OpConfig,
    ) -> Result<TrackedObject> {
        let _ = cfg;
        let seed: u64 = primary.rng.random();
        let pair = match &primary.status.variant {
            OcclusionVariant::OccludedAmbiguous { occluders } => occluders.clone(),
            _ => (String::new(), fork.second.clone()),
        };
        Ok(TrackedObject {
            id: primary.id.clone(),
            hypothesis: 1,
            is_virtual_clone: true,
            particles: fork.particles,
            history: fork.history,
            status: OcclusionStatus {
                variant: OcclusionVariant::OccludedAmbiguous { occluders: pair },
                occluded_since: fork.status.occluded_since,
                cumulative_scale: fork.status.cumulative_scale,
            },
            noise: NoiseModel {
                scale: fork.status.cumulative_scale,
                ..fork.noise
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

// The occluder the clone was forked to follow (the runner-up).
fn clone_forced_occluder(clone: &TrackedObject) -> Option<String> {
    match &clone.status.variant {
        OcclusionVariant::OccludedAmbiguous { occluders } => Some(occluders.1.clone()),
        _ => None,
    }
}
