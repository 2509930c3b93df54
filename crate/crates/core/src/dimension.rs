//! Covering and box-counting estimates for finite point clouds.
//!
//! Every number produced here is an estimate at the cloud's resolution.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points in `R^dim`, deduplicated at `resolution`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointCloud {
    dim: usize,
    resolution: f64,
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    /// Keeps the first point of each resolution cell (`round(x/h)` per axis).
    pub fn new(dim: usize, points: Vec<Vec<f64>>, resolution: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("point cloud needs dim ≥ 1".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "resolution must be positive and finite, got {resolution}"
            )));
        }
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "point {p:?} does not have {dim} coordinates"
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite point {p:?}")));
            }
            let key: Vec<i64> = p.iter().map(|v| (v / resolution).round() as i64).collect();
            if seen.insert(key) {
                kept.push(p);
            }
        }
        Ok(PointCloud {
            dim,
            resolution,
            points: kept,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coordinates `axes` of every point, re-deduplicated at `resolution`.
    pub fn project(&self, axes: &[usize], resolution: f64) -> Result<PointCloud> {
        if axes.is_empty() || axes.iter().any(|&a| a >= self.dim) {
            return Err(Error::InvalidArgument(format!(
                "projection axes {axes:?} invalid for dim {}",
                self.dim
            )));
        }
        let pts = self
            .points
            .iter()
            .map(|p| axes.iter().map(|&a| p[a]).collect())
            .collect();
        PointCloud::new(axes.len(), pts, resolution)
    }

    /// `A × B` at the coarser of the two resolutions.
    pub fn product(&self, other: &PointCloud) -> Result<PointCloud> {
        let mut pts = Vec::with_capacity(self.len() * other.len());
        for a in &self.points {
            for b in &other.points {
                pts.push(a.iter().chain(b).copied().collect());
            }
        }
        PointCloud::new(
            self.dim + other.dim,
            pts,
            self.resolution.max(other.resolution),
        )
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max(dist(a, b));
            }
        }
        best
    }

    fn lexicographic_min(&self) -> Option<usize> {
        (0..self.len()).min_by(|&i, &j| {
            self.points[i]
                .iter()
                .zip(&self.points[j])
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Centers of a farthest-point net whose balls of radius `rho` cover the cloud.
pub fn farthest_point_net(cloud: &PointCloud, rho: f64) -> Vec<usize> {
    let Some(seed) = cloud.lexicographic_min() else {
        return vec![];
    };
    let pts = cloud.points();
    let mut centers = vec![seed];
    let mut near: Vec<f64> = pts.iter().map(|p| dist(p, &pts[seed])).collect();
    loop {
        let (far, d) = near
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        if d <= rho {
            return centers;
        }
        centers.push(far);
        for (n, p) in near.iter_mut().zip(pts) {
            *n = n.min(dist(p, &pts[far]));
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PremeasureEstimate {
    pub beta: f64,
    pub delta: f64,
    /// Upper bound on `H^β_δ`; never the exact infimum.
    pub bound: f64,
    /// Diameter of the cover sets that attain the bound.
    pub cover_diameter: f64,
    pub cover_count: usize,
}

/// Greedy upper bound on `inf Σ diam(E_i)^β` over covers with `diam E_i ≤ δ`.
///
/// Candidate covers are the whole cloud (if its diameter is at most `δ`) and
/// farthest-point nets of balls with diameter `resolution·2^j ≤ δ`. Shrinking
/// `δ` only removes candidates, so the bound is nondecreasing as `δ ↓`.
pub fn hausdorff_premeasure(cloud: &PointCloud, beta: f64, delta: f64) -> Result<PremeasureEstimate> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("β must be positive, got {beta}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("δ must be positive, got {delta}")));
    }
    let empty = PremeasureEstimate {
        beta,
        delta,
        bound: 0.0,
        cover_diameter: 0.0,
        cover_count: 0,
    };
    if cloud.is_empty() {
        return Ok(empty);
    }
    let diam = cloud.diameter();
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    if diam <= delta {
        candidates.push((diam, 1));
    }
    let mut ladder = Vec::new();
    let mut d = cloud.resolution();
    while d <= delta && d < 2.0 * diam.max(cloud.resolution()) {
        ladder.push(d);
        d *= 2.0;
    }
    candidates.extend(
        ladder
            .par_iter()
            .map(|&d| (d, farthest_point_net(cloud, 0.5 * d).len()))
            .collect::<Vec<_>>(),
    );
    let best = candidates
        .into_iter()
        .map(|(d, k)| (k as f64 * d.powf(beta), d, k))
        .fold(None, |acc: Option<(f64, f64, usize)>, c| match acc {
            Some(a) if a.0 <= c.0 => Some(a),
            _ => Some(c),
        });
    Ok(match best {
        Some((bound, d, k)) => PremeasureEstimate {
            beta,
            delta,
            bound,
            cover_diameter: d,
            cover_count: k,
        },
        // δ below the resolution: no admissible cover at this resolution
        None => PremeasureEstimate {
            bound: f64::INFINITY,
            ..empty
        },
    })
}

/// Geometric box sizes from `max` down to `min`.
pub fn geometric_scales(max: f64, min: f64, count: usize) -> Result<Vec<f64>> {
    if count < 3 || !(min > 0.0 && max > min) {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 scales with 0 < min < max (got {count} in [{min}, {max}])"
        )));
    }
    let ratio = (min / max).powf(1.0 / (count - 1) as f64);
    Ok((0..count).map(|k| max * ratio.powi(k as i32)).collect())
}

/// Default box sizes: half the diameter down to four resolution cells.
pub fn default_scales(cloud: &PointCloud) -> Vec<f64> {
    let max = (0.5 * cloud.diameter()).max(8.0 * cloud.resolution());
    geometric_scales(max, 4.0 * cloud.resolution(), 8).expect("max ≥ 2·min")
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScaleCount {
    pub scale: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoxDimEstimate {
    pub dimension: f64,
    /// Root mean square of the `ln N` residuals.
    pub residual: f64,
    /// One occupied box at every scale.
    pub degenerate: bool,
    pub counts: Vec<ScaleCount>,
}

impl BoxDimEstimate {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "scale,count")?;
        for c in &self.counts {
            writeln!(out, "{},{}", c.scale, c.count)?;
        }
        Ok(())
    }
}

pub fn box_count(cloud: &PointCloud, eps: f64) -> usize {
    cloud
        .points()
        .iter()
        .map(|p| p.iter().map(|v| (v / eps).floor() as i64).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

/// Least-squares slope of `ln N(ε)` against `ln(1/ε)`.
pub fn box_dim(cloud: &PointCloud, scales: &[f64]) -> Result<BoxDimEstimate> {
    if scales.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "box dimension needs at least 3 scales, got {}",
            scales.len()
        )));
    }
    if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument("box sizes must be positive".into()));
    }
    let counts: Vec<ScaleCount> = scales
        .par_iter()
        .map(|&scale| ScaleCount {
            scale,
            count: box_count(cloud, scale),
        })
        .collect();
    let first = counts[0].count;
    if counts.iter().all(|c| c.count == first) {
        return Ok(BoxDimEstimate {
            dimension: 0.0,
            residual: 0.0,
            degenerate: first <= 1,
            counts,
        });
    }
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|c| (-c.scale.ln(), (c.count as f64).ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("box sizes must be distinct".into()));
    }
    let slope = sxy / sxx;
    let rss: f64 = pts
        .iter()
        .map(|p| (my + slope * (p.0 - mx) - p.1).powi(2))
        .sum();
    Ok(BoxDimEstimate {
        dimension: slope,
        residual: (rss / m).sqrt(),
        degenerate: false,
        counts,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PairViolation {
    pub earlier: usize,
    pub later: usize,
    /// `(t′ − t) − C|x′ − x|^s`.
    pub excess: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoareaReport {
    pub s: f64,
    pub constant: f64,
    /// Spatial dimension used in the comparison; fitted by box counting when not given.
    pub beta: f64,
    pub beta_fitted: bool,
    pub violation_count: usize,
    /// The worst violations, at most 100.
    pub violations: Vec<PairViolation>,
    pub time_dimension: BoxDimEstimate,
    /// `β/s` when `β ≤ s`, otherwise 1.
    pub predicted: f64,
    pub slack: f64,
    pub consistent: bool,
}

/// Checks `t′ − t ≤ C|x′ − x|^s` on a space-time cloud (time is the last
/// coordinate) and compares the box dimension of its time projection with `β/s`.
pub fn coarea_projection_check(
    cloud: &PointCloud,
    s: f64,
    constant: f64,
    beta: Option<f64>,
    time_scales: Option<&[f64]>,
) -> Result<CoareaReport> {
    if cloud.dim() < 2 {
        return Err(Error::InvalidArgument(
            "space-time cloud needs at least one spatial axis and a time axis".into(),
        ));
    }
    if !(s > 0.0 && constant >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need s > 0 and C ≥ 0, got s = {s}, C = {constant}"
        )));
    }
    let n = cloud.dim() - 1;
    let pts = cloud.points();
    let mut violations: Vec<PairViolation> = (0..pts.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..pts.len()).filter_map(move |j| {
                let (p, q) = (&pts[i], &pts[j]);
                let dt = q[n] - p[n];
                if dt <= 0.0 {
                    return None;
                }
                let excess = dt - constant * dist(&p[..n], &q[..n]).powf(s);
                (excess > 0.0).then_some(PairViolation {
                    earlier: i,
                    later: j,
                    excess,
                })
            })
        })
        .collect();
    let violation_count = violations.len();
    violations.sort_by(|a, b| {
        b.excess
            .total_cmp(&a.excess)
            .then(a.earlier.cmp(&b.earlier))
            .then(a.later.cmp(&b.later))
    });
    violations.truncate(100);

    let (beta, beta_fitted) = match beta {
        Some(b) => (b, false),
        None => {
            let space = cloud.project(&(0..n).collect::<Vec<_>>(), cloud.resolution())?;
            (box_dim(&space, &default_scales(&space))?.dimension.max(0.0), true)
        }
    };
    let times = cloud.project(&[n], cloud.resolution())?;
    let default;
    let scales = match time_scales {
        Some(s) => s,
        None => {
            default = default_scales(&times);
            &default
        }
    };
    let time_dimension = box_dim(&times, scales)?;
    let predicted = if beta <= s { beta / s } else { 1.0 };
    let slack = 0.1;
    Ok(CoareaReport {
        s,
        constant,
        beta,
        beta_fitted,
        violation_count,
        violations,
        consistent: time_dimension.dimension <= predicted + slack,
        time_dimension,
        predicted,
        slack,
    })
}

/// Groups sorted times into maximal runs whose consecutive gaps are at most `gap`.
pub fn time_intervals(times: &[f64], gap: f64) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for t in sorted {
        match out.last_mut() {
            Some(last) if t - last.1 <= gap => last.1 = t,
            _ => out.push((t, t)),
        }
    }
    out
}

pub fn cantor_centers(depth: u32) -> Vec<f64> {
    let mut intervals = vec![(0.0f64, 1.0f64)];
    for _ in 0..depth {
        intervals = intervals
            .into_iter()
            .flat_map(|(a, b)| {
                let third = (b - a) / 3.0;
                [(a, a + third), (b - third, b)]
            })
            .collect();
    }
    intervals.into_iter().map(|(a, b)| 0.5 * (a + b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: usize, res: f64) -> PointCloud {
        let pts = (0..points)
            .map(|k| vec![k as f64 / (points - 1) as f64])
            .collect();
        PointCloud::new(1, pts, res).unwrap()
    }

    #[test]
    fn dedup_keeps_first_in_cell() {
        let c = PointCloud::new(2, vec![vec![0.0, 0.0], vec![0.004, 0.0], vec![0.02, 0.0]], 0.01)
            .unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[0], vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(PointCloud::new(2, vec![vec![0.0]], 0.1).is_err());
        assert!(PointCloud::new(1, vec![vec![f64::NAN]], 0.1).is_err());
        assert!(PointCloud::new(1, vec![], 0.0).is_err());
    }

    #[test]
    fn premeasure_of_empty_and_single_point() {
        let empty = PointCloud::new(1, vec![], 0.1).unwrap();
        assert_eq!(hausdorff_premeasure(&empty, 0.5, 1.0).unwrap().bound, 0.0);
        let one = PointCloud::new(2, vec![vec![0.3, 0.1]], 0.01).unwrap();
        assert_eq!(hausdorff_premeasure(&one, 0.5, f64::INFINITY).unwrap().bound, 0.0);
    }

    #[test]
    fn premeasure_of_segment() {
        let seg = line(101, 0.01);
        let coarse = hausdorff_premeasure(&seg, 1.0, 1.5).unwrap();
        assert!(coarse.bound <= 1.0 + 1e-12, "{coarse:?}");
        let fine = hausdorff_premeasure(&seg, 1.0, 0.02).unwrap();
        assert!(fine.bound >= 0.99, "{fine:?}");
    }

    #[test]
    fn premeasure_of_cantor() {
        let pts = cantor_centers(8).into_iter().map(|x| vec![x]).collect();
        let c = PointCloud::new(1, pts, 3f64.powi(-9)).unwrap();
        let b = hausdorff_premeasure(&c, 2f64.ln() / 3f64.ln(), f64::INFINITY).unwrap();
        assert!((0.5..=1.1).contains(&b.bound), "{b:?}");
    }

    #[test]
    fn net_covers_cloud() {
        let seg = line(57, 1e-3);
        let rho = 0.07;
        let centers = farthest_point_net(&seg, rho);
        assert_eq!(centers[0], 0);
        for p in seg.points() {
            assert!(centers.iter().any(|&c| dist(p, &seg.points()[c]) <= rho));
        }
    }

    #[test]
    fn box_dim_of_segment_and_cantor() {
        let seg = line(10_000, 1e-5);
        let d = box_dim(&seg, &geometric_scales(0.1, 1e-3, 8).unwrap()).unwrap();
        assert!((d.dimension - 1.0).abs() < 0.05, "{d:?}");

        let pts = cantor_centers(8).into_iter().map(|x| vec![x]).collect();
        let c = PointCloud::new(1, pts, 3f64.powi(-9)).unwrap();
        let d = box_dim(&c, &default_scales(&c)).unwrap();
        assert!((d.dimension - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{d:?}");
    }

    #[test]
    fn box_dim_of_finite_set_is_zero() {
        let pts = vec![vec![0.1, 0.2], vec![0.7, 0.5], vec![0.4, 0.9]];
        let c = PointCloud::new(2, pts, 1e-6).unwrap();
        let d = box_dim(&c, &geometric_scales(0.05, 1e-4, 6).unwrap()).unwrap();
        assert_eq!(d.dimension, 0.0);
        assert!(!d.degenerate);

        let single = PointCloud::new(1, vec![vec![0.25]], 1e-3).unwrap();
        let d = box_dim(&single, &default_scales(&single)).unwrap();
        assert_eq!(d.dimension, 0.0);
        assert!(d.degenerate);
    }

    #[test]
    fn box_dim_needs_three_scales() {
        let seg = line(10, 1e-3);
        assert!(box_dim(&seg, &[0.1, 0.01]).is_err());
    }

    #[test]
    fn single_time_projects_to_dimension_zero() {
        let pts = (0..20).map(|k| vec![k as f64 * 0.01, 0.5]).collect();
        let c = PointCloud::new(2, pts, 1e-4).unwrap();
        let r = coarea_projection_check(&c, 4.0, 1.0, Some(1.0), None).unwrap();
        assert_eq!(r.time_dimension.dimension, 0.0);
        assert_eq!(r.violation_count, 0);
        assert!(r.consistent);
    }

    #[test]
    fn quartic_time_profile() {
        // x_k = 1/k accumulating at the origin, t = x⁴
        let pts: Vec<Vec<f64>> = (1..=2000)
            .map(|k| {
                let x = 1.0 / k as f64;
                vec![x, x.powi(4)]
            })
            .collect();
        let c = PointCloud::new(2, pts, 1e-14).unwrap();
        let scales = geometric_scales(1e-2, 1e-8, 9).unwrap();
        let r = coarea_projection_check(&c, 4.0, 1.0, Some(1.0), Some(&scales)).unwrap();
        assert!((r.time_dimension.dimension - 0.25).abs() <= 0.1, "{r:?}");
        assert!(r.consistent);
    }

    #[test]
    fn violations_are_reported() {
        let c = PointCloud::new(2, vec![vec![0.0, 0.0], vec![0.1, 0.5]], 1e-6).unwrap();
        let r = coarea_projection_check(&c, 2.0, 1.0, Some(1.0), Some(&[0.1, 0.01, 0.001])).unwrap();
        assert_eq!(r.violation_count, 1);
        assert_eq!((r.violations[0].earlier, r.violations[0].later), (0, 1));
        assert!((r.violations[0].excess - 0.49).abs() < 1e-12);
    }

    #[test]
    fn intervals_group_close_times() {
        assert_eq!(
            time_intervals(&[0.3, 0.1, 0.11, 0.12, 0.5], 0.015),
            vec![(0.1, 0.12), (0.3, 0.3), (0.5, 0.5)]
        );
    }
}
