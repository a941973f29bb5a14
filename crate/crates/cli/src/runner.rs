//! Runs a scenario end to end: load, compute, write table and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::config::{self, OutputFormat, ScenarioConfig};
use crate::error::CliError;
use crate::tasks::{self, TaskOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Command-line overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub output: TaskOutput,
    pub table_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.output.failures.is_empty() {
            EXIT_OK
        } else {
            EXIT_NUMERICAL
        }
    }
}

pub fn resolve(path: &Path, opts: &RunOptions) -> Result<ScenarioConfig, CliError> {
    let mut cfg = config::load(path)?;
    if let Some(dir) = &opts.output {
        cfg.output.directory = dir.clone();
    }
    if let Some(f) = opts.format {
        cfg.output.format = f;
    }
    Ok(cfg)
}

/// Computes the configured task on a pool of `jobs` workers.
pub fn compute(cfg: &ScenarioConfig, jobs: Option<usize>) -> Result<TaskOutput, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Pool(e.to_string()))?;
    Ok(pool.install(|| tasks::execute(cfg)))
}

pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    let cfg = resolve(path, opts)?;
    let started = Instant::now();
    let output = compute(&cfg, opts.jobs)?;
    let wall = started.elapsed().as_secs_f64();

    let dir = &cfg.output.directory;
    fs::create_dir_all(dir).map_err(|e| CliError::Output { path: dir.clone(), source: e })?;
    let table_path = dir.join(format!("{}.{}", cfg.task.name(), cfg.output.format.extension()));
    let body = match cfg.output.format {
        OutputFormat::Csv => output.table.to_csv_string(),
        OutputFormat::Json => pretty(&output.table.to_json()),
    };
    write(&table_path, &body)?;

    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_path": path.display().to_string(),
        "config": cfg,
        "table": table_path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "columns": output.table.columns(),
        "rows": output.table.rows().len(),
        "failures": output.failures,
        "wall_time_seconds": wall,
    });
    let manifest_path = dir.join("manifest.json");
    write(&manifest_path, &pretty(&manifest))?;
    log::info!("wrote {} and {} in {wall:.2} s", table_path.display(), manifest_path.display());
    Ok(RunReport { config: cfg, output, table_path, manifest_path })
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Output { path: path.to_path_buf(), source: e })
}
