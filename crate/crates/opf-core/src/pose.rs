//! 6-DoF pose representation and small rotation utilities.
//!
//! A pose is a translation in metres plus an orientation given as Euler
//! angles (theta, phi, psi) in radians, applied about the *fixed* world
//! axes in X-Y-Z order (extrinsic convention), i.e. the rotation matrix is
//! `Rz(psi) * Ry(phi) * Rx(theta)`. Angles are kept normalized to
//! `(-pi, pi]`. Conversions to and from canonical axis-angle form go
//! through unit quaternions, which stay well conditioned at angles near
//! zero and pi.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{Unit, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Axis below which a rotation is treated as the identity when extracting
/// an axis (the axis is then pinned to +z by convention).
pub const ZERO_ROTATION_EPS: f64 = 1e-6;

/// Wraps an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a % two_pi;
    if r <= -PI {
        r += two_pi;
    } else if r > PI {
        r -= two_pi;
    }
    r
}

/// Wrapped difference `a - b`, shortest way around the circle, in `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// Which half of the 6-DoF state an operation applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Portion {
    Translation,
    Rotation,
}

/// A rigid-body pose: translation in metres, orientation as extrinsic
/// X-Y-Z Euler angles in radians, each component in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose6Dof {
    pub translation: Vector3<f64>,
    pub rotation: Vector3<f64>,
}

impl Pose6Dof {
    /// Builds a pose, normalizing each Euler component to `(-pi, pi]`.
    pub fn new(translation: Vector3<f64>, rotation: Vector3<f64>) -> Self {
        Self {
            translation,
            rotation: rotation.map(wrap_angle),
        }
    }

    /// Builds a pose from the six scalar components
    /// `(tx, ty, tz, theta, phi, psi)`.
    pub fn from_parts(tx: f64, ty: f64, tz: f64, theta: f64, phi: f64, psi: f64) -> Self {
        Self::new(Vector3::new(tx, ty, tz), Vector3::new(theta, phi, psi))
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    /// Returns the requested 3-vector portion of the pose.
    pub fn portion(&self, portion: Portion) -> Vector3<f64> {
        match portion {
            Portion::Translation => self.translation,
            Portion::Rotation => self.rotation,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|v| v.is_finite())
            && self.rotation.iter().all(|v| v.is_finite())
    }
}

/// Canonical axis-angle rotation: unit axis, angle in `[0, pi]`; the zero
/// rotation is pinned to axis `[0, 0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: Vector3<f64>,
    pub angle: f64,
}

impl AxisAngle {
    /// Builds a canonical axis-angle from any axis/angle pair: the angle is
    /// wrapped to `(-pi, pi]` and its sign folded into the axis, the axis is
    /// normalized. A near-zero axis with a non-zero angle is rejected.
    pub fn new(axis: Vector3<f64>, angle: f64) -> Result<Self> {
        if !axis.iter().all(|v| v.is_finite()) || !angle.is_finite() {
            return Err(Error::InvalidInput(
                "axis-angle components must be finite".into(),
            ));
        }
        let mut angle = wrap_angle(angle);
        if angle.abs() < ZERO_ROTATION_EPS {
            return Ok(Self::identity());
        }
        let norm = axis.norm();
        if norm < ZERO_ROTATION_EPS {
            return Err(Error::InvalidInput(format!(
                "axis norm {norm:.3e} too small for angle {angle:.3e}"
            )));
        }
        let mut axis = axis / norm;
        if angle < 0.0 {
            angle = -angle;
            axis = -axis;
        }
        Ok(Self { axis, angle })
    }

    /// The zero rotation: angle 0 about `[0, 0, 1]`.
    pub fn identity() -> Self {
        Self {
            axis: Vector3::z(),
            angle: 0.0,
        }
    }
}

/// Converts extrinsic X-Y-Z Euler angles to canonical axis-angle form.
pub fn euler_to_axis_angle(euler: &Vector3<f64>) -> Result<AxisAngle> {
    if !euler.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("euler angles must be finite".into()));
    }
    let q = UnitQuaternion::from_euler_angles(euler.x, euler.y, euler.z);
    match q.axis_angle() {
        Some((axis, angle)) => AxisAngle::new(axis.into_inner(), angle),
        // Angle numerically zero; quaternion cannot produce an axis.
        None => Ok(AxisAngle::identity()),
    }
}

/// Converts an axis-angle rotation back to extrinsic X-Y-Z Euler angles,
/// each component wrapped to `(-pi, pi]`.
pub fn axis_angle_to_euler(aa: &AxisAngle) -> Result<Vector3<f64>> {
    if !aa.axis.iter().all(|v| v.is_finite()) || !aa.angle.is_finite() {
        return Err(Error::InvalidInput(
            "axis-angle components must be finite".into(),
        ));
    }
    if wrap_angle(aa.angle).abs() < ZERO_ROTATION_EPS {
        return Ok(Vector3::zeros());
    }
    let norm = aa.axis.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "axis must be unit length (norm {norm:.6})"
        )));
    }
    let q = UnitQuaternion::from_axis_angle(&Unit::new_normalize(aa.axis), aa.angle);
    let (theta, phi, psi) = q.euler_angles();
    Ok(Vector3::new(
        wrap_angle(theta),
        wrap_angle(phi),
        wrap_angle(psi),
    ))
}

/// Fixed-capacity ring of `(frame, pose)` samples ordered by strictly
/// increasing frame index. The tracker stores posterior means here, so the
/// window stays populated through occlusions.
#[derive(Debug, Clone)]
pub struct TrajectoryBuffer {
    capacity: usize,
    entries: VecDeque<(u64, Pose6Dof)>,
}

impl TrajectoryBuffer {
    /// Creates a buffer holding up to `capacity` samples (at least 1).
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig(
                "trajectory buffer capacity must be positive".into(),
            ));
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        })
    }

    /// Appends a sample, evicting the oldest once full. Frame indices must
    /// be strictly increasing.
    pub fn push(&mut self, frame: u64, pose: Pose6Dof) -> Result<()> {
        if let Some(&(last, _)) = self.entries.back() {
            if frame <= last {
                return Err(Error::InvalidInput(format!(
                    "frame {frame} not after previous frame {last}"
                )));
            }
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((frame, pose));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &(u64, Pose6Dof)> {
        self.entries.iter()
    }

    /// Most recent sample, if any.
    pub fn last(&self) -> Option<&(u64, Pose6Dof)> {
        self.entries.back()
    }

    /// Sample `steps` entries back from the most recent one.
    pub fn nth_back(&self, steps: usize) -> Option<&(u64, Pose6Dof)> {
        let len = self.entries.len();
        if steps < len {
            self.entries.get(len - 1 - steps)
        } else {
            None
        }
    }

    /// Exact maximum pairwise displacement over the buffered window for one
    /// portion of the pose. Translation uses the Euclidean norm of position
    /// differences; rotation wraps each Euler component to the shortest arc
    /// before taking the norm, so a slow spin crossing +-pi does not read as
    /// a large jump. Needs at least two samples.
    pub fn max_pairwise_displacement(&self, portion: Portion) -> Result<f64> {
        if self.entries.len() < 2 {
            return Err(Error::InsufficientHistory(format!(
                "pairwise displacement needs >= 2 samples, have {}",
                self.entries.len()
            )));
        }
        let mut max = 0.0f64;
        for i in 0..self.entries.len() {
            for j in (i + 1)..self.entries.len() {
                let a = self.entries[i].1.portion(portion);
                let b = self.entries[j].1.portion(portion);
                let d = match portion {
                    Portion::Translation => (a - b).norm(),
                    Portion::Rotation => Vector3::new(
                        angle_diff(a.x, b.x),
                        angle_diff(a.y, b.y),
                        angle_diff(a.z, b.z),
                    )
                    .norm(),
                };
                max = max.max(d);
            }
        }
        Ok(max)
    }
}
