//! Multi-object 6-DoF tracking with an object-permanence particle filter.
//!
//! The toolkit tracks rigid bodies from per-frame pose measurements. While
//! an object is visible it runs a plain bootstrap particle filter; when its
//! measurement disappears behind another object, the update step substitutes
//! a physically plausible virtual measurement (either an extrapolated motion
//! model or the pose of the inferred occluder) and inflates the measurement
//! covariance each occluded frame, so the estimate keeps moving and the
//! reported uncertainty grows instead of the filter stalling.
//!
//! Modules:
//! - [`pose`]: 6-DoF poses, Euler/axis-angle conversions, trajectory history
//! - [`filter`]: particle-filter primitives (predict, reweight, resample)
//! - [`motion`]: motion classification and first-order motion-model fits
//! - [`occluder`]: Bhattacharyya distances and occluder selection
//! - [`ensemble`]: per-object occlusion state machine and the frame step
//! - [`feedback`]: uncertainty readout, safety alerts, tracking gains
//! - [`scenario`]: kinematic scenario simulator and builtin scenes
//! - [`harness`]: experiment runner, result logs, CSV serialization
//! - [`report`]: error metrics and filter comparison tables

pub mod ensemble;
pub mod error;
pub mod feedback;
pub mod filter;
pub mod harness;
pub mod motion;
pub mod occluder;
pub mod pose;
pub mod report;
pub mod scenario;

pub use ensemble::{
    uncertainty_scale, Ensemble, FilterKind, OcclusionStatus, OcclusionVariant, OpConfig,
    StepOutput, TrackedObject,
};
pub use error::{Error, Result};
pub use feedback::{
    estimate_target_velocity, safety_status, sigmoid_gain, tracking_command, uncertainty,
    FeedbackConfig, RobotPoint, SafetyEvent, SafetyMonitor, SafetyStatus,
};
pub use filter::{
    effective_sample_size, estimate, gaussian_likelihood, init_particles, predict, resample,
    update_weights, Innovation, NoiseModel, ParticlePair, ParticleSet,
};
pub use harness::{
    csv_string, fmt9, load_scenario, run_experiment, run_to_csv, write_csv, FilterNoise, ResultLog,
    ResultRow, RunConfig, ScenarioSource, CSV_HEADER,
};
pub use motion::{
    classify_motion, fit_motion_model, predict_virtual_measurement, Motion, MotionModel,
};
pub use occluder::{
    bhattacharyya_gaussian, bhattacharyya_summary, select_occluder, GaussianSummary,
    OccluderSelection, COVARIANCE_FLOOR,
};
pub use pose::{
    angle_diff, axis_angle_to_euler, euler_to_axis_angle, wrap_angle, AxisAngle, Portion, Pose6Dof,
    TrajectoryBuffer,
};
pub use report::{compare_report, error_distance, format_table, table_csv, CompareRow, RunMetrics};
pub use scenario::{
    builtin_scenario, builtin_scenarios, generate_frame, is_occluded, object_pose_at, CameraModel,
    FrameEntry, MeasurementFrame, NoiseSpec, Occlusion, ScenarioSpec, SceneObject, Waypoint,
    BUILTIN_NAMES,
};
