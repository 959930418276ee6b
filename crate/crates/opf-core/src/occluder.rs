//! Occluder inference for static objects that lose their measurement.
//!
//! Candidates are ranked by the Bhattacharyya distance between the occluded
//! object's translation belief and each other object's, both summarized as
//! moment-matched Gaussians of their particle clouds. A clear winner becomes
//! the single occluder; two leaders within `occluder_gap` of each other are
//! reported as ambiguous so the caller can fork a clone hypothesis.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};

/// Variance floor added to singular particle-cloud covariances so a
/// collapsed cloud still yields a positive-definite Gaussian.
pub const COVARIANCE_FLOOR: f64 = 1e-8;

/// A Gaussian summary (mean, covariance) of one object's translation belief.
#[derive(Debug, Clone)]
pub struct GaussianSummary {
    pub mean: Vector3<f64>,
    pub cov: Matrix3<f64>,
}

impl GaussianSummary {
    /// Builds a summary from cloud moments. A covariance that already
    /// factors is kept exactly as given; only a singular one is floored,
    /// so healthy clouds lose no precision.
    pub fn new(mean: Vector3<f64>, cov: Matrix3<f64>) -> Self {
        let cov = if cov.cholesky().is_some() {
            cov
        } else {
            cov + Matrix3::identity() * COVARIANCE_FLOOR
        };
        Self { mean, cov }
    }
}

/// Bhattacharyya distance between two Gaussians of equal dimension:
/// `D = (mu1-mu2)' S^-1 (mu1-mu2) / 8 + ln(det S / sqrt(det S1 det S2)) / 2`
/// with `S = (S1 + S2) / 2`.
pub fn bhattacharyya_gaussian(
    mu1: &DVector<f64>,
    cov1: &DMatrix<f64>,
    mu2: &DVector<f64>,
    cov2: &DMatrix<f64>,
) -> Result<f64> {
    let d = mu1.len();
    if mu2.len() != d
        || cov1.nrows() != d
        || cov1.ncols() != d
        || cov2.nrows() != d
        || cov2.ncols() != d
    {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: mu {}x{}, cov {}x{} / {}x{}",
            mu1.len(),
            mu2.len(),
            cov1.nrows(),
            cov1.ncols(),
            cov2.nrows(),
            cov2.ncols()
        )));
    }
    let mixed = (cov1 + cov2) * 0.5;
    let chol = mixed.clone().cholesky().ok_or_else(|| {
        Error::NumericalSingularity("mixed covariance is not positive definite".into())
    })?;
    let ln_det_mixed: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    let ln_det = |c: &DMatrix<f64>| -> Result<f64> {
        let ch = c.clone().cholesky().ok_or_else(|| {
            Error::NumericalSingularity("covariance is not positive definite".into())
        })?;
        Ok(ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0)
    };
    let diff = mu1 - mu2;
    let maha = diff.dot(&chol.solve(&diff));
    Ok(maha / 8.0 + 0.5 * (ln_det_mixed - 0.5 * (ln_det(cov1)? + ln_det(cov2)?)))
}

/// 3-D convenience wrapper over [`bhattacharyya_gaussian`].
pub fn bhattacharyya_summary(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    let to_dyn = |s: &GaussianSummary| {
        (
            DVector::from_column_slice(s.mean.as_slice()),
            DMatrix::from_column_slice(3, 3, s.cov.as_slice()),
        )
    };
    let (mu1, c1) = to_dyn(a);
    let (mu2, c2) = to_dyn(b);
    bhattacharyya_gaussian(&mu1, &c1, &mu2, &c2)
}

/// Outcome of occluder selection, distances sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub enum OccluderSelection {
    /// One clearly nearest candidate (index into the candidate slice).
    Single { index: usize, distance: f64 },
    /// Two statistically indistinguishable leaders.
    Multiple {
        nearest: usize,
        second: usize,
        distances: (f64, f64),
    },
}

/// Ranks `candidates` by Bhattacharyya distance from `subject`. Returns
/// `Multiple` when the two nearest distances lie within `gap` of each other;
/// with a single candidate the result is always `Single`.
pub fn select_occluder(
    subject: &GaussianSummary,
    candidates: &[GaussianSummary],
    gap: f64,
) -> Result<OccluderSelection> {
    if candidates.is_empty() {
        return Err(Error::NoCandidate(
            "occluder selection needs at least one other object".into(),
        ));
    }
    let mut ranked: Vec<(usize, f64)> = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        ranked.push((i, bhattacharyya_summary(subject, c)?));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, best_d) = ranked[0];
    if ranked.len() >= 2 {
        let (second, second_d) = ranked[1];
        if second_d - best_d <= gap {
            return Ok(OccluderSelection::Multiple {
                nearest: best,
                second,
                distances: (best_d, second_d),
            });
        }
    }
    Ok(OccluderSelection::Single {
        index: best,
        distance: best_d,
    })
}
