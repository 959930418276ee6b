//! Motion classification and the first-order motion model fitted at
//! occlusion onset.
//!
//! An object is Static over its history window iff the maximum pairwise
//! translation displacement stays within `static_translation_eps` AND the
//! maximum pairwise rotation displacement stays within
//! `static_rotation_eps`; Moving is the exact complement. For a Moving
//! object the last visible window is fitted with an independent first-order
//! polynomial per component: three translation components plus one rotation
//! angle about a fixed axis. The coefficients are frozen for the whole
//! occlusion episode; refitting on extrapolated data would compound errors.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::pose::{
    axis_angle_to_euler, euler_to_axis_angle, wrap_angle, AxisAngle, Portion, Pose6Dof,
    TrajectoryBuffer, ZERO_ROTATION_EPS,
};

/// Motion regime over the recent history window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Static,
    Moving,
}

/// Frozen first-order motion model: `value(k) = slope * (k - t_ref) + intercept`
/// per component. Translation is fitted componentwise in metres; rotation is
/// reduced to a single signed angle `omega` about `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub slope_translation: Vector3<f64>,
    pub intercept_translation: Vector3<f64>,
    pub slope_omega: f64,
    pub intercept_omega: f64,
    /// Unit rotation axis the angle fit is projected onto.
    pub axis: Vector3<f64>,
    /// Frame origin of the fit parameterization (first window frame).
    pub t_ref: u64,
    /// Last frame that contributed to the fit; extrapolation targets must
    /// not precede it.
    pub fit_frame: u64,
}

impl MotionModel {
    /// Fitted translation speed in metres per frame.
    pub fn speed_per_frame(&self) -> f64 {
        self.slope_translation.norm()
    }
}

/// Classifies the buffered window. Fewer than two samples give no evidence
/// of motion, so the object is treated as Static.
pub fn classify_motion(
    history: &TrajectoryBuffer,
    static_translation_eps: f64,
    static_rotation_eps: f64,
) -> Motion {
    if history.len() < 2 {
        return Motion::Static;
    }
    let dt = history
        .max_pairwise_displacement(Portion::Translation)
        .expect("length checked above");
    let dr = history
        .max_pairwise_displacement(Portion::Rotation)
        .expect("length checked above");
    if dt <= static_translation_eps && dr <= static_rotation_eps {
        Motion::Static
    } else {
        Motion::Moving
    }
}

/// Simple linear regression `y = slope * x + intercept` by closed form.
/// `xs` must contain at least two distinct values.
fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    if sxx <= 0.0 {
        return Err(Error::InsufficientHistory(
            "all fit timestamps coincide".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, y_mean - slope * x_mean))
}

/// Picks the fixed axis the rotation fit projects onto: the axis of the most
/// recent pose's rotation; if that rotation is numerically zero, the axis of
/// the largest-angle pose in the window; if every rotation is zero, +z.
fn fit_axis(history: &TrajectoryBuffer) -> Result<Vector3<f64>> {
    let (_, last) = history.last().expect("caller checked non-empty");
    let last_aa = euler_to_axis_angle(&last.rotation)?;
    if last_aa.angle >= ZERO_ROTATION_EPS {
        return Ok(last_aa.axis);
    }
    let mut best = AxisAngle::identity();
    for (_, pose) in history.iter() {
        let aa = euler_to_axis_angle(&pose.rotation)?;
        if aa.angle > best.angle {
            best = aa;
        }
    }
    Ok(best.axis)
}

/// Fits the frozen motion model over the buffered window (least squares per
/// component). Called once, at occlusion onset, for Moving objects.
///
/// Rotation handling: each pose is converted to axis-angle and its angle is
/// projected onto the fixed axis (`omega_p = angle_p * <axis_p, axis>`), so
/// opposite-sign spins about the same line keep a coherent sign. The signed
/// sequence is then unwrapped mod 2pi before fitting, so constant spins
/// crossing +-pi fit exactly.
pub fn fit_motion_model(history: &TrajectoryBuffer) -> Result<MotionModel> {
    if history.len() < 2 {
        return Err(Error::InsufficientHistory(format!(
            "motion fit needs >= 2 samples, have {}",
            history.len()
        )));
    }
    let t_ref = history.iter().next().expect("non-empty").0;
    let axis = fit_axis(history)?;

    let mut xs = Vec::with_capacity(history.len());
    let mut tys: [Vec<f64>; 3] = Default::default();
    let mut omegas: Vec<f64> = Vec::with_capacity(history.len());
    for (frame, pose) in history.iter() {
        xs.push((frame - t_ref) as f64);
        for (ty, value) in tys.iter_mut().zip(pose.translation.iter()) {
            ty.push(*value);
        }
        let aa = euler_to_axis_angle(&pose.rotation)?;
        let mut omega = aa.angle * aa.axis.dot(&axis);
        // Unwrap against the previous sample: physical motion between
        // consecutive frames is far less than a half turn.
        if let Some(prev) = omegas.last() {
            omega -= 2.0
                * std::f64::consts::PI
                * ((omega - prev) / (2.0 * std::f64::consts::PI)).round();
        }
        omegas.push(omega);
    }

    let mut slope_translation = Vector3::zeros();
    let mut intercept_translation = Vector3::zeros();
    for c in 0..3 {
        let (a, b) = linear_fit(&xs, &tys[c])?;
        slope_translation[c] = a;
        intercept_translation[c] = b;
    }
    let (slope_omega, intercept_omega) = linear_fit(&xs, &omegas)?;

    Ok(MotionModel {
        slope_translation,
        intercept_translation,
        slope_omega,
        intercept_omega,
        axis,
        t_ref,
        fit_frame: history.last().expect("non-empty").0,
    })
}

/// Extrapolates the frozen model to frame `k` (>= the last fitted frame) as
/// a virtual pose measurement.
pub fn predict_virtual_measurement(model: &MotionModel, k: u64) -> Result<Pose6Dof> {
    if k < model.fit_frame {
        return Err(Error::InvalidInput(format!(
            "extrapolation frame {k} precedes fit frame {}",
            model.fit_frame
        )));
    }
    let t = (k - model.t_ref) as f64;
    let translation = model.slope_translation * t + model.intercept_translation;
    let omega = wrap_angle(model.slope_omega * t + model.intercept_omega);
    let rotation = if omega.abs() < ZERO_ROTATION_EPS {
        Vector3::zeros()
    } else {
        axis_angle_to_euler(&AxisAngle::new(model.axis, omega)?)?
    };
    Ok(Pose6Dof::new(translation, rotation))
}
