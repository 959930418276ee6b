//! Fixtures shared by the criterion benchmarks: canned multi-object
//! ensembles in a steady tracking state.

use nalgebra::Vector3;
use opf_core::{Ensemble, FilterKind, NoiseModel, OpConfig, Pose6Dof};

/// Objects parked half a metre apart along x, all level.
pub fn grid_poses(objects: usize) -> Vec<(String, Pose6Dof)> {
    (0..objects)
        .map(|i| {
            let pose = Pose6Dof::new(Vector3::new(0.5 * i as f64, 0.0, 0.0), Vector3::zeros());
            (format!("obj{i}"), pose)
        })
        .collect()
}

/// Builds a tracking ensemble and steps it through `warmup` fully visible
/// frames so particle clouds settle and motion histories fill.
pub fn warmed_ensemble(
    kind: FilterKind,
    objects: usize,
    particles: usize,
    warmup: u64,
) -> (Ensemble, Vec<(String, Option<Pose6Dof>)>) {
    let noise = NoiseModel::isotropic(8e-3, 3e-2, 1e-3, 2e-3).expect("valid noise");
    let mut ensemble = Ensemble::new(OpConfig::default(), kind, 30.0).expect("valid config");
    let poses = grid_poses(objects);
    for (i, (id, pose)) in poses.iter().enumerate() {
        ensemble
            .add_object(
                id.clone(),
                pose,
                particles,
                0.01,
                0.02,
                noise.clone(),
                i as u64,
            )
            .expect("object registers");
    }
    let measurements: Vec<(String, Option<Pose6Dof>)> = poses
        .into_iter()
        .map(|(id, pose)| (id, Some(pose)))
        .collect();
    for frame in 0..warmup {
        ensemble
            .step_frame(frame, &measurements)
            .expect("warmup frame steps");
    }
    (ensemble, measurements)
}
