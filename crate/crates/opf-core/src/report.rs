//! Error metrics and filter comparison tables.
//!
//! The headline numbers are mean error distances over a track: the average
//! Euclidean norm of the translation difference, and of the per-component
//! wrapped rotation difference. Comparison reports aggregate those per
//! filter across seeds into the familiar mean-plus-minus-std table.

use crate::ensemble::FilterKind;
use crate::error::{Error, Result};
use crate::pose::{angle_diff, Portion, Pose6Dof};

/// Mean error distance between two aligned tracks for one portion:
/// `(1/n) * sum_k ||p_hat_k - p_k||`, with rotation differences wrapped per
/// component before taking the norm.
pub fn error_distance(estimates: &[Pose6Dof], truth: &[Pose6Dof], portion: Portion) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "track lengths differ: {} estimates vs {} ground-truth poses",
            estimates.len(),
            truth.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::InvalidInput("empty tracks".into()));
    }
    let sum: f64 = estimates
        .iter()
        .zip(truth)
        .map(|(e, t)| match portion {
            Portion::Translation => (e.translation - t.translation).norm(),
            Portion::Rotation => {
                let d = nalgebra::Vector3::new(
                    angle_diff(e.rotation.x, t.rotation.x),
                    angle_diff(e.rotation.y, t.rotation.y),
                    angle_diff(e.rotation.z, t.rotation.z),
                );
                d.norm()
            }
        })
        .sum();
    Ok(sum / estimates.len() as f64)
}

/// Headline metrics of one experiment run.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub filter: FilterKind,
    pub seed: u64,
    pub translation_error: f64,
    pub rotation_error: f64,
}

/// One aggregated line of the comparison table.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub filter: FilterKind,
    pub metric: &'static str,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn filter_label(kind: FilterKind) -> &'static str {
    match kind {
        FilterKind::Standard => "pf",
        FilterKind::ObjectPermanence => "opf",
    }
}

/// Aggregates per-run metrics into the four-row comparison table
/// (translation and rotation, each for both filters). Requires at least
/// one run of each filter kind; runs are sorted by seed first so the
/// aggregation is independent of input order.
pub fn compare_report(metrics: &[RunMetrics]) -> Result<Vec<CompareRow>> {
    if metrics.is_empty() {
        return Err(Error::InvalidInput("no runs to compare".into()));
    }
    let mut sorted: Vec<&RunMetrics> = metrics.iter().collect();
    sorted.sort_by_key(|m| m.seed);

    let mut rows = Vec::with_capacity(4);
    for metric in ["translation", "rotation"] {
        for kind in [FilterKind::Standard, FilterKind::ObjectPermanence] {
            let values: Vec<f64> = sorted
                .iter()
                .filter(|m| m.filter == kind)
                .map(|m| match metric {
                    "translation" => m.translation_error,
                    _ => m.rotation_error,
                })
                .collect();
            if values.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "no {} runs to compare",
                    filter_label(kind)
                )));
            }
            let (mean, std) = mean_std(&values);
            rows.push(CompareRow {
                filter: kind,
                metric,
                mean,
                std,
                runs: values.len(),
            });
        }
    }
    Ok(rows)
}

/// Human-readable aligned table of the comparison rows.
pub fn format_table(rows: &[CompareRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:<8} {:>14} {:>14} {:>6}\n",
        "metric", "filter", "mean", "std", "runs"
    ));
    for row in rows {
        out.push_str(&format!(
            "{:<14} {:<8} {:>14.6e} {:>14.6e} {:>6}\n",
            row.metric,
            filter_label(row.filter),
            row.mean,
            row.std,
            row.runs
        ));
    }
    out
}

/// Machine-readable form of the same table.
pub fn table_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("metric,filter,mean,std,runs\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.8e},{:.8e},{}\n",
            row.metric,
            filter_label(row.filter),
            row.mean,
            row.std,
            row.runs
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    fn pose(x: f64, psi: f64) -> Pose6Dof {
        Pose6Dof::new(Vector3::new(x, 0.0, 0.0), Vector3::new(0.0, 0.0, psi))
    }

    #[test]
    fn identical_tracks_have_zero_error() {
        let track: Vec<Pose6Dof> = (0..10).map(|i| pose(i as f64 * 0.1, 0.2)).collect();
        assert_eq!(
            error_distance(&track, &track, Portion::Translation).unwrap(),
            0.0
        );
        assert_eq!(
            error_distance(&track, &track, Portion::Rotation).unwrap(),
            0.0
        );
    }

    #[test]
    fn constant_offset_is_the_offset() {
        let truth: Vec<Pose6Dof> = (0..20).map(|i| pose(i as f64 * 0.01, 0.0)).collect();
        let est: Vec<Pose6Dof> = truth
            .iter()
            .map(|p| Pose6Dof::new(p.translation + Vector3::new(0.05, 0.0, 0.0), p.rotation))
            .collect();
        let err = error_distance(&est, &truth, Portion::Translation).unwrap();
        assert_abs_diff_eq!(err, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn rotation_error_wraps_the_seam() {
        // Estimates at +3.1, truth at -3.1: the wrapped gap is ~0.083, not 6.2.
        let truth = vec![pose(0.0, -3.1); 5];
        let est = vec![pose(0.0, 3.1); 5];
        let err = error_distance(&est, &truth, Portion::Rotation).unwrap();
        assert_abs_diff_eq!(err, 2.0 * std::f64::consts::PI - 6.2, epsilon = 1e-12);
    }

    #[test]
    fn length_mismatch_and_empty_are_errors() {
        let a = vec![pose(0.0, 0.0); 3];
        let b = vec![pose(0.0, 0.0); 4];
        assert!(error_distance(&a, &b, Portion::Translation).is_err());
        let empty: Vec<Pose6Dof> = Vec::new();
        assert!(error_distance(&empty, &empty, Portion::Translation).is_err());
    }

    fn metric(filter: FilterKind, seed: u64, t: f64, r: f64) -> RunMetrics {
        RunMetrics {
            filter,
            seed,
            translation_error: t,
            rotation_error: r,
        }
    }

    #[test]
    fn report_has_four_rows_in_fixed_order() {
        let metrics = vec![
            metric(FilterKind::Standard, 0, 0.06, 0.4),
            metric(FilterKind::ObjectPermanence, 0, 0.01, 0.07),
        ];
        let rows = compare_report(&metrics).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].metric, "translation");
        assert_eq!(rows[0].filter, FilterKind::Standard);
        assert_eq!(rows[1].filter, FilterKind::ObjectPermanence);
        assert_eq!(rows[2].metric, "rotation");
        // Single run per filter: std must be exactly zero.
        assert!(rows.iter().all(|r| r.std == 0.0 && r.runs == 1));
    }

    #[test]
    fn report_aggregates_across_seeds() {
        let metrics = vec![
            metric(FilterKind::Standard, 0, 0.05, 0.3),
            metric(FilterKind::Standard, 1, 0.07, 0.5),
            metric(FilterKind::ObjectPermanence, 0, 0.01, 0.06),
            metric(FilterKind::ObjectPermanence, 1, 0.02, 0.08),
        ];
        let rows = compare_report(&metrics).unwrap();
        let pf_t = &rows[0];
        assert_abs_diff_eq!(pf_t.mean, 0.06, epsilon = 1e-12);
        // Sample std of {0.05, 0.07}.
        assert_abs_diff_eq!(pf_t.std, 0.01414213562373095, epsilon = 1e-12);
        assert_eq!(pf_t.runs, 2);
    }

    #[test]
    fn report_is_input_order_independent() {
        let forward = vec![
            metric(FilterKind::Standard, 0, 0.05, 0.3),
            metric(FilterKind::Standard, 1, 0.07, 0.5),
            metric(FilterKind::ObjectPermanence, 0, 0.01, 0.06),
            metric(FilterKind::ObjectPermanence, 1, 0.02, 0.08),
        ];
        let mut backward = forward.clone();
        backward.reverse();
        let a = compare_report(&forward).unwrap();
        let b = compare_report(&backward).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean, y.mean);
            assert_eq!(x.std, y.std);
        }
    }

    #[test]
    fn missing_filter_kind_is_an_error() {
        let metrics = vec![metric(FilterKind::Standard, 0, 0.05, 0.3)];
        assert!(compare_report(&metrics).is_err());
        assert!(compare_report(&[]).is_err());
    }

    #[test]
    fn tables_render_every_row() {
        let metrics = vec![
            metric(FilterKind::Standard, 0, 0.06289, 0.3870),
            metric(FilterKind::ObjectPermanence, 0, 0.01138, 0.06869),
        ];
        let rows = compare_report(&metrics).unwrap();
        let text = format_table(&rows);
        assert_eq!(text.lines().count(), 5); // header + 4 rows
        assert!(text.contains("opf"));
        let csv = table_csv(&rows);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("metric,filter,mean,std,runs"));
    }
}
