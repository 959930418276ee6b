//! Particle filter primitives for one tracked object.
//!
//! The 6-DoF state is split into two independent 3-dimensional particle
//! portions, translation and rotation (Euler angles), each carrying its own
//! weights. The measurement function is the identity on each portion;
//! rotation innovations are wrapped per component to the shortest arc.
//! Likelihoods are evaluated in log space and max-subtracted before
//! exponentiation so far-off measurements reweight instead of underflowing
//! every particle to zero.

use nalgebra::{Matrix3, Matrix6, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::pose::{angle_diff, wrap_angle, Portion, Pose6Dof};

/// How innovations are formed in a weight update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Innovation {
    /// Plain difference (translation portion).
    Linear,
    /// Per-component shortest-arc difference (rotation portion).
    Wrapped,
}

impl Portion {
    /// The innovation convention this portion uses.
    pub fn innovation(self) -> Innovation {
        match self {
            Portion::Translation => Innovation::Linear,
            Portion::Rotation => Innovation::Wrapped,
        }
    }
}

/// One weighted 3-dimensional particle cloud.
#[derive(Debug, Clone)]
pub struct ParticleSet {
    pub particles: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    /// Builds a set from explicit particles and weights. Weights must be
    /// non-negative with a positive finite sum; they are normalized here.
    pub fn new(particles: Vec<Vector3<f64>>, weights: Vec<f64>) -> Result<Self> {
        if particles.is_empty() || particles.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} particles vs {} weights",
                particles.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateUpdate("weight sum is zero".into()));
        }
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(Self { particles, weights })
    }

    /// `n` copies of one point with uniform weights.
    pub fn uniform_at(point: Vector3<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "particle count must be positive".into(),
            ));
        }
        Ok(Self {
            particles: vec![point; n],
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weighted mean of the cloud.
    pub fn weighted_mean(&self) -> Vector3<f64> {
        self.particles
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p * *w)
            .sum()
    }

    /// Weighted sample covariance around the weighted mean.
    pub fn weighted_covariance(&self) -> Matrix3<f64> {
        let mean = self.weighted_mean();
        let mut cov = Matrix3::zeros();
        for (p, w) in self.particles.iter().zip(&self.weights) {
            let d = p - mean;
            cov += d * d.transpose() * *w;
        }
        cov
    }
}

/// Both particle portions of one tracked object.
#[derive(Debug, Clone)]
pub struct ParticlePair {
    pub translation: ParticleSet,
    pub rotation: ParticleSet,
}

impl ParticlePair {
    pub fn portion(&self, portion: Portion) -> &ParticleSet {
        match portion {
            Portion::Translation => &self.translation,
            Portion::Rotation => &self.rotation,
        }
    }

    pub fn portion_mut(&mut self, portion: Portion) -> &mut ParticleSet {
        match portion {
            Portion::Translation => &mut self.translation,
            Portion::Rotation => &mut self.rotation,
        }
    }
}

/// Process noise R and measurement noise Q for both portions, plus the
/// cumulative occlusion inflation factor applied to Q.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub process_translation: Matrix3<f64>,
    pub process_rotation: Matrix3<f64>,
    pub measurement_translation: Matrix3<f64>,
    pub measurement_rotation: Matrix3<f64>,
    /// Cumulative inflation alpha; 1 while the object is visible.
    pub scale: f64,
}

impl NoiseModel {
    /// Isotropic noise model from standard deviations (not variances).
    pub fn isotropic(r_t: f64, r_r: f64, q_t: f64, q_r: f64) -> Result<Self> {
        for (name, v) in [("r_t", r_t), ("r_r", r_r), ("q_t", q_t), ("q_r", q_r)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "noise std {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if q_t <= 0.0 || q_r <= 0.0 {
            return Err(Error::InvalidConfig(
                "measurement noise must be strictly positive".into(),
            ));
        }
        Ok(Self {
            process_translation: Matrix3::identity() * r_t * r_t,
            process_rotation: Matrix3::identity() * r_r * r_r,
            measurement_translation: Matrix3::identity() * q_t * q_t,
            measurement_rotation: Matrix3::identity() * q_r * q_r,
            scale: 1.0,
        })
    }

    pub fn process(&self, portion: Portion) -> &Matrix3<f64> {
        match portion {
            Portion::Translation => &self.process_translation,
            Portion::Rotation => &self.process_rotation,
        }
    }

    /// Effective measurement covariance `Q~ = scale * Q` for one portion.
    pub fn effective_measurement(&self, portion: Portion) -> Matrix3<f64> {
        let q = match portion {
            Portion::Translation => &self.measurement_translation,
            Portion::Rotation => &self.measurement_rotation,
        };
        q * self.scale
    }

    /// Combined 6x6 effective measurement covariance (block diagonal).
    pub fn effective_combined(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.effective_measurement(Portion::Translation));
        m.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&self.effective_measurement(Portion::Rotation));
        m
    }
}

/// Symmetric PSD square root via eigendecomposition; tolerates
/// semi-definite inputs (e.g. a zero matrix) that Cholesky rejects.
fn psd_sqrt(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let eig = m.symmetric_eigen();
    let mut d = Matrix3::zeros();
    for i in 0..3 {
        let ev = eig.eigenvalues[i];
        if ev < -1e-9 {
            return Err(Error::InvalidConfig(format!(
                "covariance has negative eigenvalue {ev:e}"
            )));
        }
        d[(i, i)] = ev.max(0.0).sqrt();
    }
    Ok(eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Draws the initial particle clouds for both portions: Gaussian spread
/// around `initial` with isotropic standard deviations, uniform weights.
pub fn init_particles<R: Rng>(
    initial: &Pose6Dof,
    n: usize,
    spread_translation: f64,
    spread_rotation: f64,
    rng: &mut R,
) -> Result<ParticlePair> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "particle count must be positive".into(),
        ));
    }
    if !initial.is_finite() {
        return Err(Error::InvalidInput("initial pose must be finite".into()));
    }
    if spread_translation < 0.0 || spread_rotation < 0.0 {
        return Err(Error::InvalidConfig(
            "init spread must be non-negative".into(),
        ));
    }
    let normal = StandardNormal;
    let mut draw = |center: Vector3<f64>, spread: f64, wrap: bool| -> ParticleSet {
        let particles = (0..n)
            .map(|_| {
                let z = Vector3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng));
                let p = center + z * spread;
                if wrap {
                    p.map(wrap_angle)
                } else {
                    p
                }
            })
            .collect();
        ParticleSet {
            particles,
            weights: vec![1.0 / n as f64; n],
        }
    };
    Ok(ParticlePair {
        translation: draw(initial.translation, spread_translation, false),
        rotation: draw(initial.rotation, spread_rotation, true),
    })
}

/// Propagates every particle through the motion model
/// `x <- x + delta + eps`, `eps ~ N(0, process_cov)`. Weights are untouched.
pub fn predict<R: Rng>(
    set: &mut ParticleSet,
    motion_delta: &Vector3<f64>,
    process_cov: &Matrix3<f64>,
    rng: &mut R,
) -> Result<()> {
    let sqrt = psd_sqrt(process_cov)?;
    let noiseless = sqrt == Matrix3::zeros();
    let normal = StandardNormal;
    for p in &mut set.particles {
        *p += motion_delta;
        if !noiseless {
            let z = Vector3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng));
            *p += sqrt * z;
        }
    }
    Ok(())
}

/// Evaluates the 3-dimensional Gaussian measurement density
/// `(2pi)^(-3/2) det(Q)^(-1/2) exp(-nu' Q^-1 nu / 2)` at innovation `nu`.
pub fn gaussian_likelihood(nu: &Vector3<f64>, q_eff: &Matrix3<f64>) -> Result<f64> {
    let chol = q_eff.cholesky().ok_or_else(|| {
        Error::NumericalSingularity("effective measurement covariance is not PD".into())
    })?;
    let l = chol.l();
    let det = (l[(0, 0)] * l[(1, 1)] * l[(2, 2)]).powi(2);
    let m = nu.dot(&chol.solve(nu));
    Ok((2.0 * std::f64::consts::PI).powf(-1.5) * det.powf(-0.5) * (-0.5 * m).exp())
}

/// Reweights the cloud against a measurement: `w <- eta * P(y | x) * w`.
///
/// Log-likelihoods are max-subtracted before exponentiation, so the update
/// stays usable even when the measurement sits far outside the cloud.
pub fn update_weights(
    set: &mut ParticleSet,
    measurement: &Vector3<f64>,
    q_eff: &Matrix3<f64>,
    innovation: Innovation,
) -> Result<()> {
    if !measurement.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("measurement must be finite".into()));
    }
    let chol = q_eff.cholesky().ok_or_else(|| {
        Error::NumericalSingularity("effective measurement covariance is not PD".into())
    })?;

    let mut log_w = Vec::with_capacity(set.len());
    let mut max = f64::NEG_INFINITY;
    for (p, w) in set.particles.iter().zip(&set.weights) {
        let nu = match innovation {
            Innovation::Linear => measurement - p,
            Innovation::Wrapped => Vector3::new(
                angle_diff(measurement.x, p.x),
                angle_diff(measurement.y, p.y),
                angle_diff(measurement.z, p.z),
            ),
        };
        // Constant factors of the density cancel in the normalization.
        let ll = -0.5 * nu.dot(&chol.solve(&nu)) + w.ln();
        max = max.max(ll);
        log_w.push(ll);
    }
    if !max.is_finite() {
        return Err(Error::DegenerateUpdate(
            "all posterior weights vanished".into(),
        ));
    }
    let mut sum = 0.0;
    for (w, lw) in set.weights.iter_mut().zip(&log_w) {
        *w = (lw - max).exp();
        sum += *w;
    }
    for w in &mut set.weights {
        *w /= sum;
    }
    Ok(())
}

/// Kish effective sample size `1 / sum(w^2)`.
pub fn effective_sample_size(set: &ParticleSet) -> f64 {
    1.0 / set.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling: one uniform draw strides `n` equally spaced
/// positions through the cumulative weights. Output weights are uniform.
pub fn resample<R: Rng>(set: &mut ParticleSet, rng: &mut R) {
    use rand::RngExt;
    let n = set.len();
    // U(0, 1/n); exactly zero would bias the first stratum boundary.
    let mut r: f64 = rng.random();
    while r == 0.0 {
        r = rng.random();
    }
    let step = 1.0 / n as f64;
    let u = r * step;

    let mut out = Vec::with_capacity(n);
    let mut cum = set.weights[0];
    let mut i = 0usize;
    for j in 0..n {
        let target = u + j as f64 * step;
        while cum < target && i + 1 < n {
            i += 1;
            cum += set.weights[i];
        }
        out.push(set.particles[i]);
    }
    set.particles = out;
    set.weights.fill(step);
}

/// Posterior estimate over both portions: weighted mean translation,
/// per-component weighted circular mean rotation, and the block-diagonal
/// 6x6 weighted sample covariance. Rotation deviations are wrapped.
pub fn estimate(pair: &ParticlePair) -> (Pose6Dof, Matrix6<f64>) {
    let t_mean = pair.translation.weighted_mean();
    let t_cov = pair.translation.weighted_covariance();

    // Circular mean per Euler component: angle of the weighted phasor sum.
    let mut sin = Vector3::<f64>::zeros();
    let mut cos = Vector3::<f64>::zeros();
    for (p, w) in pair.rotation.particles.iter().zip(&pair.rotation.weights) {
        for k in 0..3 {
            sin[k] += p[k].sin() * *w;
            cos[k] += p[k].cos() * *w;
        }
    }
    let r_mean = Vector3::new(sin.x.atan2(cos.x), sin.y.atan2(cos.y), sin.z.atan2(cos.z));
    let mut r_cov = Matrix3::zeros();
    for (p, w) in pair.rotation.particles.iter().zip(&pair.rotation.weights) {
        let d = Vector3::new(
            angle_diff(p.x, r_mean.x),
            angle_diff(p.y, r_mean.y),
            angle_diff(p.z, r_mean.z),
        );
        r_cov += d * d.transpose() * *w;
    }

    let mut cov = Matrix6::zeros();
    cov.fixed_view_mut::<3, 3>(0, 0).copy_from(&t_cov);
    cov.fixed_view_mut::<3, 3>(3, 3).copy_from(&r_cov);
    (Pose6Dof::new(t_mean, r_mean), cov)
}
