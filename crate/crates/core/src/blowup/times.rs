use serde::{Deserialize, Serialize};

use super::{detect_singular, BlowupParams, SingularPointRecord};
use crate::dimension::{box_dim, default_scales, time_intervals, BoxDimEstimate, PointCloud};
use crate::error::{Error, Result};
use crate::vi_solver::SolutionFamily;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SingularTimesReport {
    /// Time for the free boundary to advance one cell; singular times closer
    /// than this are not resolved by the grid.
    pub time_resolution: f64,
    /// `(t, number of detected singular points)` for every `t` with at least one.
    pub counts: Vec<(f64, usize)>,
    /// Maximal runs of singular times with gaps at most `time_resolution`.
    pub intervals: Vec<(f64, f64)>,
    /// Connected components of the positivity set per `t`.
    pub positive_components: Vec<usize>,
    pub box_dim: BoxDimEstimate,
}

/// Detects singular points at every member of the family and estimates the
/// box dimension of the set of singular times at the family's time resolution.
pub fn singular_times(
    family: &SolutionFamily,
    params: &BlowupParams,
) -> Result<(SingularTimesReport, Vec<SingularPointRecord>)> {
    let fallback = family
        .t_values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let time_resolution = family.time_resolution().unwrap_or(fallback);
    if !(time_resolution.is_finite() && time_resolution > 0.0) {
        return Err(Error::InvalidArgument(
            "singular times need at least two family members".into(),
        ));
    }
    let mut records = Vec::new();
    let mut counts = Vec::new();
    for (&t, sol) in family.t_values.iter().zip(&family.solutions) {
        let found = detect_singular(sol, t, params);
        if !found.is_empty() {
            counts.push((t, found.len()));
        }
        records.extend(found);
    }
    let times: Vec<f64> = counts.iter().map(|c| c.0).collect();
    let cloud = PointCloud::new(
        1,
        times.iter().map(|&t| vec![t]).collect(),
        time_resolution,
    )?;
    let box_dim = box_dim(&cloud, &default_scales(&cloud))?;
    Ok((
        SingularTimesReport {
            time_resolution,
            intervals: time_intervals(&times, time_resolution),
            counts,
            positive_components: family
                .solutions
                .iter()
                .map(|s| s.positive_components(None))
                .collect(),
            box_dim,
        },
        records,
    ))
}

/// `(x, t)` points of singular records at resolution `h`.
pub fn spacetime_cloud(records: &[SingularPointRecord], resolution: f64) -> Result<PointCloud> {
    let dim = records.first().map_or(1, |r| r.dim) + 1;
    PointCloud::new(
        dim,
        records
            .iter()
            .map(|r| r.location.iter().copied().chain([r.t]).collect())
            .collect(),
        resolution,
    )
}
