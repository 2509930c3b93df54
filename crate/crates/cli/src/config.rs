//! Experiment configuration: TOML, or JSON when the file ends in `.json`.

use std::path::Path;

use fblab_core::blowup::BlowupParams;
use fblab_core::expr::Expr;
use fblab_core::field::Grid;
use fblab_core::vi_solver::SolverParams;
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

/// Schema or validation failure with the dotted path of the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Solve,
    Family,
    Heleshaw,
    Analyze,
    Signorini,
    Dimension,
    FullPipeline,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Solve => "solve",
            Kind::Family => "family",
            Kind::Heleshaw => "heleshaw",
            Kind::Analyze => "analyze",
            Kind::Signorini => "signorini",
            Kind::Dimension => "dimension",
            Kind::FullPipeline => "full-pipeline",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryConfig>,
    /// The set `K` where `u` is held fixed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signorini: Option<SignoriniConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<DimensionConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    /// Nodes per axis, odd so that the origin is a node.
    pub nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dim: 2,
            half_width: 1.0,
            nodes: 101,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> fblab_core::Result<Grid> {
        Grid::centered_box(self.dim, self.half_width, self.nodes)
    }
}

/// Boundary data `g`; families use `g + t`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    /// Expression in `x1..xn` (or `x, y, z`) and `t`.
    Expr { expr: String },
    /// The radial solution with contact ball of this radius.
    Radial { radius: f64 },
    /// `max((½+a)x₂² − a x₁² + shift, 0)`; without `shift` the largest one
    /// keeping the base point in contact is found by bisection.
    TwoBump {
        #[serde(default = "default_bump")]
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<f64>,
        #[serde(default = "default_bisection")]
        bisection_steps: usize,
    },
}

fn default_bump() -> f64 {
    0.5
}

fn default_bisection() -> usize {
    36
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Disk {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub disks: Vec<Disk>,
    /// Value held on `K` by `solve`; Hele-Shaw runs use `t`.
    #[serde(default)]
    pub value: f64,
}

impl SourceConfig {
    pub fn pairs(&self) -> Vec<(Vec<f64>, f64)> {
        self.disks.iter().map(|d| (d.center.clone(), d.radius)).collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Either explicit `t_values` or `start, stop, count` with a spacing.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    #[serde(default)]
    pub include_zero: bool,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl FamilyConfig {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let mut ts = match (&self.t_values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n < 2 {
                    return Err(ConfigError::new("family.count", "need at least 2 values"));
                }
                if !(a < b) {
                    return Err(ConfigError::new("family.stop", "must exceed family.start"));
                }
                if self.spacing == Spacing::Log && !(a > 0.0) {
                    return Err(ConfigError::new("family.start", "log spacing needs a positive start"));
                }
                (0..n)
                    .map(|k| {
                        let s = k as f64 / (n - 1) as f64;
                        match self.spacing {
                            Spacing::Linear => a + (b - a) * s,
                            Spacing::Log => a * (b / a).powf(s),
                        }
                    })
                    .collect()
            }
            _ => {
                return Err(ConfigError::new(
                    "family",
                    "give either t_values or all of start, stop, count",
                ))
            }
        };
        if self.include_zero && ts.first() != Some(&0.0) {
            ts.insert(0, 0.0);
        }
        if ts.is_empty() {
            return Err(ConfigError::new("family.t_values", "empty"));
        }
        if ts.iter().any(|t| !t.is_finite()) || ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new("family", "parameters must be finite and strictly increasing"));
        }
        Ok(ts)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub blowup: BlowupParams,
    /// Largest profile radius; capped by the distance to the box.
    pub r_max: f64,
    /// Monotonicity slack in units of the grid spacing.
    pub slack_cells: f64,
    /// Base point for cleaning and for a bisected two-bump shift.
    pub base: Vec<f64>,
    pub cleaning_radii: Vec<f64>,
    /// The base singular point must be gone for every `t` at or above this.
    pub absent_from: f64,
    pub min_exponent: f64,
    pub max_fit_residual: f64,
    /// Exact solution to compare a `solve` run against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub exact_tol: f64,
    pub radius_cells: f64,
    pub residual_max: f64,
    /// Upper bound on the box dimension of detected singular times.
    pub times_dim_max: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            blowup: BlowupParams::default(),
            r_max: 0.2,
            slack_cells: 10.0,
            base: vec![],
            cleaning_radii: vec![],
            absent_from: 1e-3,
            min_exponent: 1.0,
            max_fit_residual: 0.2,
            exact: None,
            exact_tol: 1e-8,
            radius_cells: 2.0,
            residual_max: 1e-6,
            times_dim_max: 0.35,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SignoriniConfig {
    pub dims: Vec<usize>,
    pub max_lambda: u32,
    /// Random even fields per dimension for the odd-frequency check.
    pub samples: usize,
    pub derivative_tol: f64,
}

impl Default for SignoriniConfig {
    fn default() -> Self {
        SignoriniConfig {
            dims: vec![2, 3],
            max_lambda: 5,
            samples: 20,
            derivative_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CloudSource {
    /// Centers of the middle-thirds Cantor intervals.
    Cantor { depth: u32 },
    /// Equally spaced points on `[0, 1]`.
    Segment { points: usize },
    Points { points: Vec<Vec<f64>> },
    /// CSV of coordinates, one point per row, optional header.
    File { path: String },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScaleRange {
    pub max: f64,
    pub min: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DimensionConfig {
    pub source: CloudSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<ScaleRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Cover diameter bound; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
    #[serde(default = "default_dim_tol")]
    pub tolerance: f64,
}

fn default_dim_tol() -> f64 {
    0.05
}

impl ExperimentConfig {
    pub fn parse(text: &str, json: bool) -> Result<Self, ConfigError> {
        let value: serde_json::Value = if json {
            serde_json::from_str(text).map_err(|e| ConfigError::new("<document>", e.to_string()))?
        } else {
            let t: toml::Value =
                toml::from_str(text).map_err(|e| ConfigError::new("<document>", e.to_string().trim().to_string()))?;
            serde_json::to_value(t).map_err(|e| ConfigError::new("<document>", e.to_string()))?
        };
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, json)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Canonical bytes hashed into run names and summaries.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Checks everything the chosen kind needs.
    pub fn validate(&self, kind: Kind) -> Result<(), ConfigError> {
        if self.schema != SCHEMA {
            return Err(ConfigError::new(
                "schema",
                format!("unsupported schema {} (this build reads {SCHEMA})", self.schema),
            ));
        }
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            return Err(ConfigError::new("grid.dim", "must be 1, 2 or 3"));
        }
        if !(g.half_width > 0.0 && g.half_width.is_finite()) {
            return Err(ConfigError::new("grid.half_width", "must be positive"));
        }
        if g.nodes < 5 || g.nodes.is_multiple_of(2) {
            return Err(ConfigError::new("grid.nodes", "must be odd and at least 5"));
        }
        if let Some(w) = self.solver.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(ConfigError::new("solver.omega", "must lie in (0, 2)"));
            }
        }
        if let Some(t) = self.solver.tol {
            if !(t > 0.0) {
                return Err(ConfigError::new("solver.tol", "must be positive"));
            }
        }
        if let Some(b) = &self.boundary {
            self.validate_boundary(b)?;
        }
        if let Some(s) = &self.source {
            if s.disks.is_empty() {
                return Err(ConfigError::new("source.disks", "at least one disk"));
            }
            for (k, d) in s.disks.iter().enumerate() {
                if d.center.len() != g.dim {
                    return Err(ConfigError::new(
                        format!("source.disks[{k}].center"),
                        format!("expected {} coordinates", g.dim),
                    ));
                }
                if !(d.radius > 0.0) {
                    return Err(ConfigError::new(format!("source.disks[{k}].radius"), "must be positive"));
                }
            }
        }
        if let Some(f) = &self.family {
            f.values()?;
        }
        self.validate_analysis()?;
        if let Some(s) = &self.signorini {
            if s.dims.is_empty() || s.dims.iter().any(|&d| !(2..=4).contains(&d)) {
                return Err(ConfigError::new("signorini.dims", "dimensions must lie in 2..=4"));
            }
            if s.max_lambda < 3 {
                return Err(ConfigError::new("signorini.max_lambda", "must be at least 3"));
            }
        }
        if let Some(d) = &self.dimension {
            validate_dimension(d)?;
        }
        let need = |present: bool, key: &str| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::new(key, format!("required for kind `{}`", kind.name())))
            }
        };
        match kind {
            Kind::Solve | Kind::Analyze => need(self.boundary.is_some() || self.source.is_some(), "boundary")?,
            Kind::Family => {
                need(self.boundary.is_some(), "boundary")?;
                need(self.family.is_some(), "family")?;
            }
            Kind::Heleshaw => {
                need(self.source.is_some(), "source")?;
                need(self.family.is_some(), "family")?;
                if g.dim != 2 {
                    return Err(ConfigError::new("grid.dim", "Hele-Shaw runs are two-dimensional"));
                }
            }
            Kind::Signorini => need(self.signorini.is_some(), "signorini")?,
            Kind::Dimension => need(self.dimension.is_some(), "dimension")?,
            Kind::FullPipeline => {
                if self.boundary.is_none()
                    && self.source.is_none()
                    && self.signorini.is_none()
                    && self.dimension.is_none()
                {
                    return Err(ConfigError::new("<root>", "nothing to run"));
                }
            }
        }
        if kind == Kind::Analyze && self.boundary.is_none() {
            return Err(ConfigError::new("boundary", "required for kind `analyze`"));
        }
        Ok(())
    }

    fn validate_boundary(&self, b: &BoundaryConfig) -> Result<(), ConfigError> {
        match b {
            BoundaryConfig::Expr { expr } => {
                let e = Expr::parse(expr).map_err(|e| ConfigError::new("boundary.expr", e.to_string()))?;
                if e.arity() > self.grid.dim {
                    return Err(ConfigError::new(
                        "boundary.expr",
                        format!("uses x{} on a {}-dimensional grid", e.arity(), self.grid.dim),
                    ));
                }
            }
            BoundaryConfig::Radial { radius } => {
                if !(*radius > 0.0 && *radius < self.grid.half_width) {
                    return Err(ConfigError::new("boundary.radius", "must lie inside the box"));
                }
            }
            BoundaryConfig::TwoBump { a, bisection_steps, .. } => {
                if self.grid.dim != 2 {
                    return Err(ConfigError::new("grid.dim", "the two-bump datum is two-dimensional"));
                }
                if !(*a > 0.0) {
                    return Err(ConfigError::new("boundary.a", "must be positive"));
                }
                if *bisection_steps == 0 {
                    return Err(ConfigError::new("boundary.bisection_steps", "must be positive"));
                }
            }
        }
        Ok(())
    }

    fn validate_analysis(&self) -> Result<(), ConfigError> {
        let a = &self.analysis;
        if !(a.r_max > 0.0) {
            return Err(ConfigError::new("analysis.r_max", "must be positive"));
        }
        if !(a.slack_cells >= 0.0) {
            return Err(ConfigError::new("analysis.slack_cells", "must be nonnegative"));
        }
        if !a.base.is_empty() && a.base.len() != self.grid.dim {
            return Err(ConfigError::new("analysis.base", format!("expected {} coordinates", self.grid.dim)));
        }
        if a.cleaning_radii.iter().any(|r| !(*r > 0.0)) || a.cleaning_radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new("analysis.cleaning_radii", "must be positive and increasing"));
        }
        if !a.cleaning_radii.is_empty() && a.cleaning_radii.len() < 2 {
            return Err(ConfigError::new("analysis.cleaning_radii", "need at least two radii for a fit"));
        }
        if let Some(e) = &a.exact {
            Expr::parse(e).map_err(|e| ConfigError::new("analysis.exact", e.to_string()))?;
        }
        if a.blowup.order == 0 {
            return Err(ConfigError::new("analysis.blowup.order", "must be positive"));
        }
        if !(a.blowup.theta > 0.0 && a.blowup.theta < 1.0) {
            return Err(ConfigError::new("analysis.blowup.theta", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn base_point(&self) -> Vec<f64> {
        if self.analysis.base.is_empty() {
            vec![0.0; self.grid.dim]
        } else {
            self.analysis.base.clone()
        }
    }
}

fn validate_dimension(d: &DimensionConfig) -> Result<(), ConfigError> {
    match &d.source {
        CloudSource::Cantor { depth } if *depth > 20 => {
            return Err(ConfigError::new("dimension.source.depth", "at most 20"))
        }
        CloudSource::Segment { points } if *points < 2 => {
            return Err(ConfigError::new("dimension.source.points", "at least 2"))
        }
        CloudSource::Points { points } => {
            let dim = points.first().map_or(0, Vec::len);
            if dim == 0 || points.iter().any(|p| p.len() != dim) {
                return Err(ConfigError::new("dimension.source.points", "points need one common nonzero length"));
            }
        }
        _ => {}
    }
    if let Some(r) = d.resolution {
        if !(r > 0.0) {
            return Err(ConfigError::new("dimension.resolution", "must be positive"));
        }
    }
    if let Some(s) = &d.scales {
        if s.count < 3 {
            return Err(ConfigError::new("dimension.scales.count", "at least 3 scales"));
        }
        if !(s.min > 0.0 && s.min < s.max) {
            return Err(ConfigError::new("dimension.scales", "need 0 < min < max"));
        }
    }
    if let Some(b) = d.beta {
        if !(b > 0.0) {
            return Err(ConfigError::new("dimension.beta", "must be positive"));
        }
    }
    if let Some(b) = d.delta {
        if !(b > 0.0) {
            return Err(ConfigError::new("dimension.delta", "must be positive"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RADIAL: &str = r#"
schema = 1
kind = "solve"

[grid]
nodes = 41

[boundary]
kind = "radial"
radius = 0.3
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::parse(RADIAL, false).unwrap();
        assert_eq!(cfg.kind, Some(Kind::Solve));
        assert_eq!(cfg.grid.nodes, 41);
        assert_eq!(cfg.grid.half_width, 1.0);
        cfg.validate(Kind::Solve).unwrap();
        let back = ExperimentConfig::parse(&cfg.to_toml(), false).unwrap();
        assert_eq!(back, cfg);
        let json = ExperimentConfig::parse(&cfg.canonical_json(), true).unwrap();
        assert_eq!(json, cfg);
    }

    #[test]
    fn errors_carry_paths() {
        let bad = RADIAL.replace("nodes = 41", "nodes = \"many\"");
        let e = ExperimentConfig::parse(&bad, false).unwrap_err();
        assert_eq!(e.path, "grid.nodes");
        let bad = RADIAL.replace("radius = 0.3", "radius = 0.3\ncolour = 1");
        let e = ExperimentConfig::parse(&bad, false).unwrap_err();
        assert!(e.message.contains("colour"), "{e}");
        let cfg = ExperimentConfig::parse(&RADIAL.replace("nodes = 41", "nodes = 40"), false).unwrap();
        assert_eq!(cfg.validate(Kind::Solve).unwrap_err().path, "grid.nodes");
        let e = ExperimentConfig::parse(r#"{"schema": 1, "solver": {"omega": "fast"}}"#, true).unwrap_err();
        assert_eq!(e.path, "solver.omega");
    }

    #[test]
    fn family_ranges() {
        let f = FamilyConfig {
            t_values: None,
            start: Some(1e-3),
            stop: Some(1e-1),
            count: Some(3),
            spacing: Spacing::Log,
            include_zero: true,
        };
        let v = f.values().unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], 0.0);
        assert!((v[2] - 1e-2).abs() < 1e-15);
        let both = FamilyConfig {
            t_values: Some(vec![0.1]),
            ..f
        };
        assert_eq!(both.values().unwrap_err().path, "family");
    }

    #[test]
    fn kind_requirements() {
        let cfg = ExperimentConfig::parse("schema = 1", false).unwrap();
        assert_eq!(cfg.validate(Kind::Heleshaw).unwrap_err().path, "source");
        assert_eq!(cfg.validate(Kind::Signorini).unwrap_err().path, "signorini");
        let cfg = ExperimentConfig::parse("schema = 2", false).unwrap();
        assert_eq!(cfg.validate(Kind::Solve).unwrap_err().path, "schema");
    }
}
