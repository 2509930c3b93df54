//! Box-counting and premeasure estimates for configured point clouds.

use fblab_core::dimension::{
    box_dim, cantor_centers, default_scales, geometric_scales, hausdorff_premeasure, PointCloud,
};

use super::{Artifacts, RunError, Stage};
use crate::config::{CloudSource, ConfigError, DimensionConfig, ExperimentConfig};
use crate::summary::Suite;

fn read_points(path: &str) -> Result<Vec<Vec<f64>>, RunError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ConfigError::new("dimension.source.path", e.to_string()))?;
    let mut points = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| ConfigError::new("dimension.source.path", e.to_string()))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(p) => points.push(p),
            // a header row
            Err(_) if line == 0 => {}
            Err(e) => {
                return Err(ConfigError::new("dimension.source.path", format!("row {}: {e}", line + 1)).into())
            }
        }
    }
    Ok(points)
}

pub fn build_cloud(d: &DimensionConfig) -> Result<PointCloud, RunError> {
    let (points, res) = match &d.source {
        CloudSource::Cantor { depth } => (
            cantor_centers(*depth).into_iter().map(|x| vec![x]).collect(),
            3f64.powi(-(*depth as i32) - 1),
        ),
        CloudSource::Segment { points } => (
            (0..*points).map(|k| vec![k as f64 / (*points - 1) as f64]).collect(),
            0.25 / (*points - 1) as f64,
        ),
        CloudSource::Points { points } => (points.clone(), 1e-9),
        CloudSource::File { path } => (read_points(path)?, 1e-9),
    };
    let dim = points.first().map_or(1, Vec::len);
    PointCloud::new(dim, points, d.resolution.unwrap_or(res)).stage("point cloud")
}

pub(super) fn dimension(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<Vec<Suite>, RunError> {
    let d = cfg.dimension.as_ref().expect("validated");
    let cloud = build_cloud(d)?;
    let scales = match &d.scales {
        Some(s) => geometric_scales(s.max, s.min, s.count).stage("scales")?,
        None => default_scales(&cloud),
    };
    let est = box_dim(&cloud, &scales).stage("box dimension")?;
    let mut counts = Vec::new();
    est.write_csv(&mut counts).stage("box counts")?;
    art.write("box_counts.csv", counts)?;
    let premeasure = match d.beta {
        Some(beta) => Some(
            hausdorff_premeasure(&cloud, beta, d.delta.unwrap_or(f64::INFINITY)).stage("premeasure")?,
        ),
        None => None,
    };
    art.write_json(
        "dimension.json",
        &serde_json::json!({
            "label": "estimate",
            "points": cloud.len(),
            "resolution": cloud.resolution(),
            "box_dim": est,
            "premeasure": premeasure,
        }),
    )?;
    let mut suite = Suite::new("box-dimension", "box-counting dimension bounds the Hausdorff dimension")
        .metric("estimate", est.dimension)
        .metric("fit_residual", est.residual)
        .metric("degenerate", est.degenerate)
        .metric("points", cloud.len());
    if let Some(p) = &premeasure {
        suite = suite.metric("premeasure_bound", p.bound);
    }
    if let Some(expect) = d.expect {
        suite = suite
            .metric("expected", expect)
            .metric("tolerance", d.tolerance)
            .check((est.dimension - expect).abs() <= d.tolerance);
    }
    Ok(vec![suite])
}
