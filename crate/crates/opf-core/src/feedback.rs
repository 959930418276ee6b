//! Uncertainty readout, safety alerting, and the cautious tracking law.
//!
//! The tracker's confidence is summarized by one scalar: the trace of the
//! combined effective measurement covariance. Downstream consumers use it
//! two ways. A latched monitor raises an alert the moment the scalar
//! reaches a safety threshold (once per excursion, not once per frame), and
//! a velocity controller attenuates its gains through decreasing sigmoids
//! so the commanded motion dies off as confidence collapses instead of
//! chasing a guess.

use nalgebra::{Matrix6, Vector3};

use crate::error::{Error, Result};

/// Tuning for alerts and gain attenuation.
#[derive(Debug, Clone)]
pub struct FeedbackConfig {
    /// Uncertainty level (trace units) considered unsafe.
    pub epsilon_safe: f64,
    /// Nominal proportional gain (1/s), used in full at zero uncertainty.
    pub k_p_nom: f64,
    /// Nominal feedforward gain, dimensionless in [0, 1].
    pub k_d_nom: f64,
    /// Sigmoid steepness exponent, >= 1.
    pub steepness: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self {
            epsilon_safe: 1.0,
            k_p_nom: 2.0,
            k_d_nom: 0.5,
            steepness: 2.0,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon_safe.is_finite() || self.epsilon_safe <= 0.0 {
            return Err(Error::InvalidConfig("epsilon_safe must be > 0".into()));
        }
        if !self.k_p_nom.is_finite() || self.k_p_nom <= 0.0 {
            return Err(Error::InvalidConfig("k_p_nom must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.k_d_nom) {
            return Err(Error::InvalidConfig("k_d_nom must be in [0, 1]".into()));
        }
        if !self.steepness.is_finite() || self.steepness < 1.0 {
            return Err(Error::InvalidConfig("steepness must be >= 1".into()));
        }
        Ok(())
    }
}

/// Scalar uncertainty: the trace of the combined effective covariance.
pub fn uncertainty(q_effective: &Matrix6<f64>) -> f64 {
    q_effective.trace()
}

/// Instantaneous safety classification of an uncertainty level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafetyStatus {
    Normal,
    Alert,
}

/// Alert level as a pure function of the uncertainty (boundary inclusive).
pub fn safety_status(u: f64, cfg: &FeedbackConfig) -> SafetyStatus {
    if u >= cfg.epsilon_safe {
        SafetyStatus::Alert
    } else {
        SafetyStatus::Normal
    }
}

/// Threshold-crossing event from the latched monitor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafetyEvent {
    Entered,
    Exited,
}

/// Latch that turns a per-frame uncertainty stream into crossing events:
/// one `Entered` when the level first reaches the threshold, one `Exited`
/// when it first drops back below.
#[derive(Debug, Clone)]
pub struct SafetyMonitor {
    epsilon_safe: f64,
    in_alert: bool,
}

impl SafetyMonitor {
    pub fn new(epsilon_safe: f64) -> Result<Self> {
        if !epsilon_safe.is_finite() || epsilon_safe <= 0.0 {
            return Err(Error::InvalidConfig("epsilon_safe must be > 0".into()));
        }
        Ok(Self {
            epsilon_safe,
            in_alert: false,
        })
    }

    pub fn is_alert(&self) -> bool {
        self.in_alert
    }

    /// Feeds one uncertainty sample; returns an event only on a crossing.
    pub fn observe(&mut self, u: f64) -> Option<SafetyEvent> {
        let alert = u >= self.epsilon_safe;
        match (self.in_alert, alert) {
            (false, true) => {
                self.in_alert = true;
                Some(SafetyEvent::Entered)
            }
            (true, false) => {
                self.in_alert = false;
                Some(SafetyEvent::Exited)
            }
            _ => None,
        }
    }
}

/// Decreasing sigmoid gain: `k_nom * m^n / (m^n + u^n)` with midpoint
/// `m = epsilon_safe / 2`. Full gain at zero uncertainty, exactly half at
/// the midpoint, and tending to zero as the uncertainty blows up.
pub fn sigmoid_gain(u: f64, k_nom: f64, epsilon_safe: f64, steepness: f64) -> f64 {
    let m = (epsilon_safe / 2.0).powf(steepness);
    k_nom * m / (m + u.powf(steepness))
}

/// A kinematic point robot: position plus commanded velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotPoint {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl RobotPoint {
    pub fn at(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
        }
    }

    /// Explicit Euler step under the current velocity command.
    pub fn step(&mut self, dt: f64) {
        self.position += self.velocity * dt;
    }
}

/// Finite-difference target velocity from consecutive pose estimates.
pub fn estimate_target_velocity(
    previous: &Vector3<f64>,
    current: &Vector3<f64>,
    frame_rate: f64,
) -> Vector3<f64> {
    (current - previous) * frame_rate
}

/// Velocity command toward the tracked target with uncertainty-attenuated
/// gains: a proportional pull to the estimate plus a feedforward share of
/// the target's own velocity.
pub fn tracking_command(
    robot: &RobotPoint,
    target: &Vector3<f64>,
    target_velocity: &Vector3<f64>,
    u: f64,
    cfg: &FeedbackConfig,
) -> Vector3<f64> {
    let k_p = sigmoid_gain(u, cfg.k_p_nom, cfg.epsilon_safe, cfg.steepness);
    let k_d = sigmoid_gain(u, cfg.k_d_nom, cfg.epsilon_safe, cfg.steepness);
    -(robot.position - target) * k_p + target_velocity * k_d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn config_validation() {
        assert!(FeedbackConfig::default().validate().is_ok());
        let bad = FeedbackConfig {
            epsilon_safe: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FeedbackConfig {
            k_d_nom: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FeedbackConfig {
            steepness: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn uncertainty_is_the_trace() {
        assert_eq!(uncertainty(&Matrix6::identity()), 6.0);
        let scaled = Matrix6::identity() * 1.0609;
        assert_relative_eq!(uncertainty(&scaled), 6.3654, max_relative = 1e-12);
    }

    #[test]
    fn uncertainty_is_linear_in_scale() {
        // trace(alpha Q) = alpha trace(Q) for a PSD matrix built as A A^T.
        let a = Matrix6::<f64>::from_fn(|i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let q = a * a.transpose();
        for alpha in [0.5, 1.0, 2.75, 100.0] {
            assert_relative_eq!(
                uncertainty(&(q * alpha)),
                alpha * uncertainty(&q),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn alert_boundary_is_inclusive() {
        let cfg = FeedbackConfig::default();
        assert_eq!(safety_status(0.0, &cfg), SafetyStatus::Normal);
        assert_eq!(safety_status(cfg.epsilon_safe, &cfg), SafetyStatus::Alert);
        assert_eq!(
            safety_status(cfg.epsilon_safe * (1.0 - 1e-12), &cfg),
            SafetyStatus::Normal
        );
    }

    #[test]
    fn monitor_fires_once_per_excursion() {
        let mut monitor = SafetyMonitor::new(10.0).unwrap();
        let ramp: Vec<f64> = (0..40)
            .map(|i| if i < 20 { i as f64 } else { (40 - i) as f64 })
            .collect();
        let mut entered = 0;
        let mut exited = 0;
        for u in ramp {
            match monitor.observe(u) {
                Some(SafetyEvent::Entered) => entered += 1,
                Some(SafetyEvent::Exited) => exited += 1,
                None => {}
            }
        }
        assert_eq!(entered, 1);
        assert_eq!(exited, 1);
        assert!(!monitor.is_alert());
    }

    #[test]
    fn sigmoid_endpoints_and_midpoint() {
        let (k, eps, n) = (2.0, 8.0, 3.0);
        assert_eq!(sigmoid_gain(0.0, k, eps, n), k);
        // Midpoint is exactly half: both powers are the same float, so the
        // ratio is a power-of-two division.
        assert_eq!(sigmoid_gain(eps / 2.0, k, eps, n), k / 2.0);
        assert!(sigmoid_gain(1e9, k, eps, n) < 1e-20);
    }

    #[test]
    fn tracking_equilibrium_and_proportional_pull() {
        let cfg = FeedbackConfig::default();
        let target = Vector3::new(0.4, -0.2, 0.1);
        let robot = RobotPoint::at(target);
        let cmd = tracking_command(&robot, &target, &Vector3::zeros(), 0.0, &cfg);
        assert_eq!(cmd, Vector3::zeros());

        // Zero uncertainty, static target: pure proportional at full gain.
        let offset = Vector3::new(0.05, 0.0, -0.02);
        let robot = RobotPoint::at(target + offset);
        let cmd = tracking_command(&robot, &target, &Vector3::zeros(), 0.0, &cfg);
        assert_relative_eq!(cmd, -offset * cfg.k_p_nom, epsilon = 1e-14);
    }

    #[test]
    fn huge_uncertainty_effectively_stops_the_robot() {
        let cfg = FeedbackConfig::default();
        let target = Vector3::zeros();
        let d = Vector3::new(0.3, 0.0, 0.0);
        let robot = RobotPoint::at(d);
        let cmd = tracking_command(&robot, &target, &Vector3::zeros(), 1e4, &cfg);
        assert!(cmd.norm() < 1e-3 * cfg.k_p_nom * d.norm());
    }

    #[test]
    fn command_is_linear_in_offset_and_feedforward() {
        let cfg = FeedbackConfig::default();
        let target = Vector3::new(0.1, 0.2, 0.3);
        let d = Vector3::new(0.04, -0.03, 0.02);
        let v = Vector3::new(0.1, 0.05, 0.0);
        let u = 0.7;
        let one = tracking_command(&RobotPoint::at(target + d), &target, &v, u, &cfg);
        let two = tracking_command(
            &RobotPoint::at(target + d * 2.0),
            &target,
            &(v * 2.0),
            u,
            &cfg,
        );
        assert_relative_eq!((two - one * 2.0).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_loop_settles_within_first_order_bound() {
        // Desk-scale point robot at 100 Hz: from 10 cm away the error must
        // fall below 1 mm within 5/k_p seconds.
        let cfg = FeedbackConfig::default();
        let target = Vector3::new(0.55, 0.0, 0.3);
        let mut robot = RobotPoint::at(target + Vector3::new(0.06, -0.08, 0.0));
        let dt = 0.01;
        let steps = (5.0 / cfg.k_p_nom / dt).ceil() as usize;
        for _ in 0..steps {
            robot.velocity = tracking_command(&robot, &target, &Vector3::zeros(), 0.0, &cfg);
            robot.step(dt);
        }
        assert!(
            (robot.position - target).norm() < 1e-3,
            "settled to {}",
            (robot.position - target).norm()
        );
    }

    #[test]
    fn commanded_speed_decays_as_uncertainty_explodes() {
        let cfg = FeedbackConfig::default();
        let target = Vector3::zeros();
        let robot = RobotPoint::at(Vector3::new(0.2, 0.0, 0.0));
        let mut last = f64::INFINITY;
        let mut u = 0.01;
        while u < 1e4 {
            let cmd = tracking_command(&robot, &target, &Vector3::zeros(), u, &cfg);
            assert!(cmd.norm() <= last);
            last = cmd.norm();
            u *= 1.6;
        }
    }

    #[test]
    fn finite_difference_velocity() {
        let prev = Vector3::new(0.0, 0.0, 0.0);
        let curr = Vector3::new(0.003, -0.006, 0.0);
        let v = estimate_target_velocity(&prev, &curr, 30.0);
        assert_relative_eq!(v.x, 0.09, max_relative = 1e-12);
        assert_relative_eq!(v.y, -0.18, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn sigmoid_is_monotone_non_increasing(
            k in 1e-3..10.0f64,
            eps in 1e-3..1e3f64,
            n in 1.0..8.0f64,
            u1 in 0.0..1e6f64,
            u2 in 0.0..1e6f64,
        ) {
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            let g_lo = sigmoid_gain(lo, k, eps, n);
            let g_hi = sigmoid_gain(hi, k, eps, n);
            prop_assert!(g_hi <= g_lo + 1e-15);
            prop_assert!(g_lo <= k);
            prop_assert!(g_hi >= 0.0);
        }
    }
}
