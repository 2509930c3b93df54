use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SingularPointRecord;
use crate::error::{Error, Result};
use crate::vi_solver::SolutionFamily;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CleaningRow {
    pub r: f64,
    /// Smallest tested `t` above the base with a contact-free `B_r(x₀)`; `None` if never.
    pub t_clear: Option<f64>,
    /// `min_{D_r}(u^t − u^{base})` at the first tested `t` above the base.
    pub barrier_min: Option<f64>,
    /// `barrier_min / (r (t − base))`.
    pub growth_constant: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CleaningReport {
    pub location: Vec<f64>,
    pub base_t: f64,
    pub rows: Vec<CleaningRow>,
    /// `s` in `t_clear ≈ C r^s`, fitted in log-log over rows with finite `t_clear`.
    pub exponent: Option<f64>,
    pub prefactor: Option<f64>,
    /// Root mean square of the log residuals.
    pub residual: Option<f64>,
    pub nondecreasing: bool,
}

/// Contact-free radii over the family's parameters above the record's `t`.
pub fn cleaning_experiment(
    family: &SolutionFamily,
    record: &SingularPointRecord,
    radii: &[f64],
) -> Result<CleaningReport> {
    let base = family
        .t_values
        .iter()
        .position(|&t| (t - record.t).abs() <= 1e-15 * (1.0 + t.abs()))
        .ok_or_else(|| {
            Error::InvalidArgument(format!("family has no solution at the base t = {}", record.t))
        })?;
    let x0 = &record.location;
    let sols = &family.solutions;
    let g = sols[base].grid();
    let h = g.max_spacing();
    let n = g.dim();
    let normal: Vec<f64> = match record.frame_matrix() {
        Some(f) => f.column(n - 1).iter().copied().collect(),
        None => record.p2.frame().column(n - 1).iter().copied().collect(),
    };

    let rows: Vec<CleaningRow> = radii
        .par_iter()
        .map(|&r| {
            let ball = g.nodes_in_ball(x0, r);
            let clear = |k: usize| ball.iter().all(|&i| !sols[k].contact[i]);
            // contact sets are nested, so clearing is monotone in k
            let (mut lo, mut hi) = (base + 1, sols.len());
            while lo < hi {
                let mid = (lo + hi) / 2;
                if clear(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            let t_clear = (lo < sols.len()).then(|| family.t_values[lo]);

            let (barrier_min, growth_constant) = if base + 1 < sols.len() {
                let dt = family.t_values[base + 1] - family.t_values[base];
                let cut = r / (2.0 * n as f64).sqrt();
                let mut min: Option<f64> = None;
                for i in g.nodes_in_ball(x0, r + 0.5 * h) {
                    let x = g.node(i);
                    let z: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
                    let rad = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let yn: f64 = z.iter().zip(&normal).map(|(a, b)| a * b).sum();
                    if rad >= r - 0.5 * h && yn.abs() > cut {
                        let d = sols[base + 1].u.values()[i] - sols[base].u.values()[i];
                        min = Some(min.map_or(d, |m: f64| m.min(d)));
                    }
                }
                (min, min.map(|m| m / (r * dt)))
            } else {
                (None, None)
            };
            CleaningRow {
                r,
                t_clear,
                barrier_min,
                growth_constant,
            }
        })
        .collect();

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|row| row.t_clear.map(|t| (row.r.ln(), (t - record.t).ln())))
        .filter(|p| p.1.is_finite())
        .collect();
    let (exponent, prefactor, residual) = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let det = m * sxx - sx * sx;
        if det.abs() < 1e-300 {
            (None, None, None)
        } else {
            let s = (m * sxy - sx * sy) / det;
            let c = (sy - s * sx) / m;
            let rss: f64 = pts.iter().map(|p| (c + s * p.0 - p.1).powi(2)).sum();
            (Some(s), Some(c.exp()), Some((rss / m).sqrt()))
        }
    } else {
        (None, None, None)
    };
    let nondecreasing = rows.windows(2).all(|w| match (w[0].t_clear, w[1].t_clear) {
        (Some(a), Some(b)) => w[0].r > w[1].r || a <= b,
        (None, Some(_)) => w[0].r > w[1].r,
        _ => true,
    });
    Ok(CleaningReport {
        location: x0.clone(),
        base_t: record.t,
        rows,
        exponent,
        prefactor,
        residual,
        nondecreasing,
    })
}
