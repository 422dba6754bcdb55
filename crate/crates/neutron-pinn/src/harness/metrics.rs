//! Accuracy metrics of a predictor against a reference field.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{EigenSolveResult, FieldGrid};

/// Error measures between a predicted and a reference field. `omega1_mse`
/// restricts the MSE to the final-time slice; `e_r` is the mean pointwise
/// relative error over points with nonzero truth (`masked` counts the
/// excluded points) and `e_inf` is the max absolute error over the max
/// absolute truth.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub omega1_mse: f64,
    pub e_r: f64,
    pub e_inf: f64,
    pub masked: usize,
}

impl MetricsReport {
    pub fn csv_header() -> &'static str {
        "mse,omega1_mse,e_r,e_inf,masked"
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.mse, self.omega1_mse, self.e_r, self.e_inf, self.masked)
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::csv_header(), self.csv_row())
    }
}

/// Compare aligned value arrays. `final_slice[i]` marks the points belonging
/// to the final-time slice.
pub fn compute_metrics(
    pred: &[f64],
    truth: &[f64],
    final_slice: &[bool],
) -> Result<MetricsReport> {
    if pred.len() != truth.len() || pred.len() != final_slice.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), got: pred.len() });
    }
    if pred.is_empty() {
        return Err(Error::InvalidConfig("metrics need at least one point".into()));
    }
    let mut sq_sum = 0.0;
    let mut sq_final = 0.0;
    let mut n_final = 0usize;
    let mut rel_sum = 0.0;
    let mut n_rel = 0usize;
    let mut masked = 0usize;
    let mut max_diff = 0.0f64;
    let mut max_truth = 0.0f64;
    for i in 0..pred.len() {
        let d = pred[i] - truth[i];
        if !d.is_finite() {
            return Err(Error::Divergence { context: "metrics".into() });
        }
        sq_sum += d * d;
        if final_slice[i] {
            sq_final += d * d;
            n_final += 1;
        }
        if truth[i] == 0.0 {
            masked += 1;
        } else {
            rel_sum += (d / truth[i]).abs();
            n_rel += 1;
        }
        max_diff = max_diff.max(d.abs());
        max_truth = max_truth.max(truth[i].abs());
    }
    let mse = sq_sum / pred.len() as f64;
    let omega1_mse = if n_final == 0 { mse } else { sq_final / n_final as f64 };
    let e_r = if n_rel == 0 { 0.0 } else { rel_sum / n_rel as f64 };
    let e_inf = if max_truth == 0.0 { max_diff } else { max_diff / max_truth };
    Ok(MetricsReport { mse, omega1_mse, e_r, e_inf, masked })
}

/// Evaluate a space-time predictor on every grid node of a reference
/// [`FieldGrid`] and compare. The last snapshot is the final-time slice.
pub fn metrics_against_grid(
    pred: &mut dyn FnMut(&[f64], f64) -> Result<f64>,
    grid: &FieldGrid,
) -> Result<MetricsReport> {
    let mut p = Vec::new();
    let mut t = Vec::new();
    let mut fin = Vec::new();
    let last = grid.snapshots.len() - 1;
    for (s, snap) in grid.snapshots.iter().enumerate() {
        if grid.is_2d() {
            for (j, &y) in grid.ys.iter().enumerate() {
                for (i, &x) in grid.xs.iter().enumerate() {
                    p.push(pred(&[x, y], snap.t)?);
                    t.push(snap.values[j * grid.xs.len() + i]);
                    fin.push(s == last);
                }
            }
        } else {
            for (i, &x) in grid.xs.iter().enumerate() {
                p.push(pred(&[x], snap.t)?);
                t.push(snap.values[i]);
                fin.push(s == last);
            }
        }
    }
    compute_metrics(&p, &t, &fin)
}

/// Evaluate a steady-state predictor on the active cells of an eigensolver
/// result and compare against one group flux. The predictor output is
/// rescaled to the oracle normalization (global max 1 over both groups) by
/// matching the peak of this group.
pub fn metrics_against_eigen(
    pred: &mut dyn FnMut(f64, f64) -> Result<f64>,
    oracle: &EigenSolveResult,
    flux: &[f64],
) -> Result<MetricsReport> {
    let mut p = Vec::new();
    let mut t = Vec::new();
    for j in 0..oracle.ny {
        for i in 0..oracle.nx {
            let c = oracle.idx(i, j);
            if !oracle.active[c] {
                continue;
            }
            let (x, y) = oracle.position(i, j);
            p.push(pred(x, y)?);
            t.push(flux[c]);
        }
    }
    // The eigenvector is defined up to a scale; align the predictor by its
    // peak before comparing shapes.
    let peak_p = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let peak_t = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak_p > 0.0 && peak_t > 0.0 {
        let s = peak_t / peak_p;
        for v in &mut p {
            *v *= s;
        }
    }
    let fin = vec![false; p.len()];
    compute_metrics(&p, &t, &fin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_fields_score_zero() {
        let v = [0.3, 0.8, 1.0, 0.1];
        let m = compute_metrics(&v, &v, &[false, false, true, true]).unwrap();
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.omega1_mse, 0.0);
        assert_eq!(m.e_r, 0.0);
        assert_eq!(m.e_inf, 0.0);
        assert_eq!(m.masked, 0);
    }

    #[test]
    fn constant_offset_on_unit_max_field_sets_e_inf() {
        let truth = [0.2, 0.5, 1.0, 0.7];
        let pred: Vec<f64> = truth.iter().map(|v| v + 0.01).collect();
        let m = compute_metrics(&pred, &truth, &[false; 4]).unwrap();
        assert!((m.e_inf - 0.01).abs() < 1e-12, "e_inf = {}", m.e_inf);
        assert!((m.mse - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn zero_truth_points_are_masked_not_divided() {
        let truth = [0.0, 1.0, 2.0];
        let pred = [0.1, 1.1, 2.2];
        let m = compute_metrics(&pred, &truth, &[false; 3]).unwrap();
        assert_eq!(m.masked, 1);
        assert!((m.e_r - 0.1).abs() < 1e-12, "e_r = {}", m.e_r);
        assert!(m.e_r.is_finite());
    }

    #[test]
    fn final_slice_restriction_is_honored() {
        let truth = [1.0, 1.0];
        let pred = [1.0, 1.5];
        let m = compute_metrics(&pred, &truth, &[false, true]).unwrap();
        assert!((m.omega1_mse - 0.25).abs() < 1e-12);
        assert!((m.mse - 0.125).abs() < 1e-12);
    }
}
