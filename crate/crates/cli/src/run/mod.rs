//! Experiment orchestration: one run owns one fresh output directory.

mod catalog;
mod cloud;
mod obstacle;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::summary::{Suite, Summary};

pub use obstacle::Datum;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Numerical {
        stage: String,
        source: fblab_core::Error,
    },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub(crate) trait Stage<T> {
    fn stage(self, name: &str) -> Result<T, RunError>;
}

impl<T> Stage<T> for fblab_core::Result<T> {
    fn stage(self, name: &str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numerical {
            stage: name.to_string(),
            source,
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Also write nodal fields as CSV.
    pub csv: bool,
}

/// Files written by a run, recorded relative to the run directory.
pub(crate) struct Artifacts {
    root: PathBuf,
    prefix: String,
    names: BTreeSet<String>,
}

impl Artifacts {
    fn new(root: PathBuf) -> Self {
        Artifacts {
            root,
            prefix: String::new(),
            names: BTreeSet::new(),
        }
    }

    pub(crate) fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), RunError> {
        let rel = format!("{}{name}", self.prefix);
        let path = self.root.join(&rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        self.names.insert(rel);
        Ok(())
    }

    pub(crate) fn write_json(&mut self, name: &str, value: &impl serde::Serialize) -> Result<(), RunError> {
        let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
        s.push('\n');
        self.write(name, s)
    }

    pub(crate) fn write_field(
        &mut self,
        stem: &str,
        sol: &fblab_core::vi_solver::Solution,
        t: Option<f64>,
        csv: bool,
    ) -> Result<(), RunError> {
        let mut bin = Vec::new();
        fblab_core::field::io::write_binary(&sol.u, &mut bin).stage("field output")?;
        self.write(&format!("{stem}.bin"), bin)?;
        self.write_json(&format!("{stem}.json"), &sol.sidecar(t))?;
        if csv {
            let mut text = Vec::new();
            fblab_core::field::io::write_csv(&sol.u, &mut text).stage("field output")?;
            self.write(&format!("{stem}.csv"), text)?;
        }
        Ok(())
    }
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: Summary,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()))
}

/// `<out>/<kind>-<UTC time>-<hash prefix>`, suffixed until unused.
fn fresh_dir(out: &Path, kind: Kind, hash: &str) -> Result<PathBuf, RunError> {
    std::fs::create_dir_all(out)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{}-{stamp}-{}", kind.name(), &hash[..12]);
    let mut k = 0;
    loop {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = out.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => k += 1,
            Err(e) => return Err(e.into()),
        }
    }
}

/// Validates, runs and writes `summary.json`. Failed suites are reported in
/// the summary, not as an error.
pub fn run(cfg: &ExperimentConfig, kind: Kind, out: &Path, opts: &RunOptions) -> Result<RunOutput, RunError> {
    cfg.validate(kind)?;
    let hash = config_hash(cfg);
    let dir = fresh_dir(out, kind, &hash)?;
    let mut art = Artifacts::new(dir.clone());
    art.write("config.toml", cfg.to_toml())?;
    let suites = match execute(cfg, kind, &mut art, opts) {
        Ok(s) => s,
        Err(e) => {
            let _ = art.write_json(
                "error.json",
                &serde_json::json!({ "kind": kind.name(), "error": e.to_string() }),
            );
            return Err(e);
        }
    };
    let summary = Summary {
        schema: crate::config::SCHEMA,
        kind: kind.name().to_string(),
        seed: cfg.seed,
        config_sha256: hash,
        passed: suites.iter().all(|s| s.passed),
        suites,
        artifacts: art.names.iter().cloned().collect(),
    };
    std::fs::write(dir.join("summary.json"), summary.to_json())?;
    Ok(RunOutput { dir, summary })
}

fn execute(cfg: &ExperimentConfig, kind: Kind, art: &mut Artifacts, opts: &RunOptions) -> Result<Vec<Suite>, RunError> {
    match kind {
        Kind::Solve => obstacle::solve(cfg, art, opts),
        Kind::Family => obstacle::family(cfg, art, opts),
        Kind::Analyze => obstacle::analyze(cfg, art, opts),
        Kind::Heleshaw => obstacle::heleshaw(cfg, art, opts),
        Kind::Signorini => catalog::signorini(cfg, art),
        Kind::Dimension => cloud::dimension(cfg, art),
        Kind::FullPipeline => {
            let mut suites = Vec::new();
            let mut stages: Vec<Kind> = Vec::new();
            if cfg.signorini.is_some() {
                stages.push(Kind::Signorini);
            }
            if cfg.boundary.is_some() {
                stages.push(Kind::Analyze);
            }
            if cfg.source.is_some() && cfg.family.is_some() && cfg.grid.dim == 2 {
                stages.push(Kind::Heleshaw);
            }
            if cfg.dimension.is_some() {
                stages.push(Kind::Dimension);
            }
            for k in stages {
                art.prefix = format!("{}/", k.name());
                for mut s in execute(cfg, k, art, opts)? {
                    s.name = format!("{}/{}", k.name(), s.name);
                    suites.push(s);
                }
            }
            art.prefix.clear();
            Ok(suites)
        }
    }
}
