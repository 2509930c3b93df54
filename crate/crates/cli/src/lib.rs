//! Configuration, orchestration and reporting for `fblab`.

pub mod config;
pub mod report;
pub mod run;
pub mod summary;

pub use config::{ConfigError, ExperimentConfig, Kind};
pub use run::{run, RunError, RunOptions, RunOutput};
pub use summary::{Suite, Summary};

/// Sizes the global rayon pool from `--threads`, else `FBLAB_THREADS`.
pub fn init_threads(flag: Option<usize>) -> Result<(), ConfigError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("FBLAB_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                ConfigError::new("FBLAB_THREADS", format!("expected a thread count, got `{v}`"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(ConfigError::new("threads", "must be positive"));
        }
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
