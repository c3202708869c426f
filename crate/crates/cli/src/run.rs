//! The `run` subcommand: execute a scenario, write CSVs and a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use calabi_core::Conventions;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;
use crate::tasks::{run_task, Inputs, Overrides};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub overrides: Overrides,
    pub conventions: Conventions,
    pub serial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskRecord {
    pub index: usize,
    pub kind: String,
    pub label: Option<String>,
    pub csv: Option<String>,
    pub rows: usize,
    pub status: String,
    pub metric: Option<f64>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub error: Option<String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplerRecord {
    pub kind: &'static str,
    pub note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub cli_version: &'static str,
    pub core_version: &'static str,
    pub scenario_path: String,
    pub scenario: Scenario,
    pub overrides: OverrideRecord,
    pub serial: bool,
    pub threads: usize,
    pub conventions: Vec<(String, String)>,
    pub sampler: SamplerRecord,
    pub tasks: Vec<TaskRecord>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverrideRecord {
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

/// Outcome of a run whose inputs were valid.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl RunReport {
    /// 0 when every task succeeded within tolerance, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.manifest.tasks.iter().all(|t| t.status == "ok") {
            0
        } else {
            1
        }
    }
}

fn file_stem(index: usize, kind: &str, label: Option<&str>) -> String {
    let tail: String = label
        .unwrap_or(kind)
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{index:02}_{tail}")
}

/// Runs `f` on a single-thread pool when `serial`, otherwise on the global
/// pool.
pub fn with_parallelism<T: Send>(serial: bool, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    if serial {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build a serial thread pool: {e}")))?;
        Ok(pool.install(f))
    } else {
        Ok(f())
    }
}

/// Parses `scenario_path`, runs its tasks in order and writes one CSV per
/// successful task plus `manifest.json` into `out_dir`.
pub fn run_scenario(scenario_path: &Path, out_dir: &Path, opts: &RunOptions) -> CliResult<RunReport> {
    let scenario = Scenario::from_file(scenario_path)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
    let start = Instant::now();
    let (records, threads) = with_parallelism(opts.serial, || -> CliResult<(Vec<TaskRecord>, usize)> {
        let inputs = Inputs::build(&scenario)?;
        let mut records = Vec::new();
        for (index, task) in scenario.tasks.iter().enumerate() {
            let t0 = Instant::now();
            let mut record = TaskRecord {
                index,
                kind: task.kind.name().to_string(),
                label: task.label.clone(),
                csv: None,
                rows: 0,
                status: "ok".into(),
                metric: None,
                tol: None,
                seed: 0,
                error: None,
                wall_seconds: 0.0,
            };
            match run_task(task, &inputs, &opts.conventions, &opts.overrides) {
                Ok(out) => {
                    let name = format!("{}.csv", file_stem(index, task.kind.name(), task.label.as_deref()));
                    out.table.write(&out_dir.join(&name))?;
                    record.csv = Some(name);
                    record.rows = out.table.rows().len();
                    record.metric = out.metric;
                    record.tol = out.tol;
                    record.seed = out.seed;
                    if !out.within_tolerance() {
                        record.status = "tolerance_exceeded".into();
                    }
                }
                Err(e @ CliError::UnknownColumn { .. }) => return Err(e),
                Err(e) => {
                    record.status = "failed".into();
                    record.error = Some(e.to_string());
                }
            }
            record.wall_seconds = t0.elapsed().as_secs_f64();
            records.push(record);
        }
        Ok((records, rayon::current_num_threads()))
    })??;
    let o = &opts.overrides;
    let manifest = Manifest {
        tool: "calabi",
        cli_version: env!("CARGO_PKG_VERSION"),
        core_version: calabi_core::VERSION,
        scenario_path: scenario_path.display().to_string(),
        scenario,
        overrides: OverrideRecord {
            grid: o.grid,
            steps: o.steps,
            tol: o.tol,
            seed: o.seed,
        },
        serial: opts.serial,
        threads,
        conventions: opts
            .conventions
            .entries()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        sampler: SamplerRecord {
            kind: "halton",
            note: "Halton points with a Cranley-Patterson shift drawn from ChaCha8 seeded by the task seed",
        },
        tasks: records,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let manifest_path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&manifest_path, text + "\n").map_err(|e| CliError::io(format!("writing {}", manifest_path.display()), e))?;
    Ok(RunReport { manifest, manifest_path })
}
