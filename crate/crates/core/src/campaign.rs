//! Multi-seed campaigns: argument parsing, parallel execution and CSV output.
//!
//! Output layout of a campaign directory:
//!
//! ```text
//! trace_seed_<seed>.csv   seed,iteration,hypervolume,wall_seconds,x1..xd,y1..yK
//! summary.csv             iteration,n_runs,hv_median,hv_q25,hv_q75,wall_seconds_mean
//! campaign.meta           resolved configuration, one key=value per line
//! errors.txt              one line per failed seed (only when a seed fails)
//! ```
//!
//! Trace inputs and objectives are in native problem units (objectives in
//! their minimization form). Hypervolume is measured against the problem's
//! reference point.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use rayon::prelude::*;
use serde::Deserialize;

use crate::benchmarks::make_problem;
use crate::engine::{run_bo, Method, RunConfig, RunRecord};
use crate::error::{Error, Result};

pub const TRACE_PREFIX: &str = "trace_seed_";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const META_FILE: &str = "campaign.meta";
pub const ERRORS_FILE: &str = "errors.txt";

/// Command-line flags. Every flag overrides the same key in `--config`.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "nmmo", version, about = "Multi-objective Bayesian optimization campaigns")]
pub struct Cli {
    /// Benchmark problem [default: zdt3].
    #[arg(long)]
    pub problem: Option<String>,
    /// ehvi, nmmo_nested, nmmo_joint or binom.
    #[arg(long)]
    pub method: Option<String>,
    /// Horizon cap H.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Optimization iterations T (after the initial design) [default: 65].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Initial Sobol points N0 [default: 5].
    #[arg(long = "init-points")]
    pub init_points: Option<usize>,
    /// Number of seeds; runs use seeds first_seed..first_seed+n [default: 15].
    #[arg(long)]
    pub seeds: Option<usize>,
    /// First seed of the campaign [default: 0].
    #[arg(long = "first-seed")]
    pub first_seed: Option<u64>,
    /// Monte-Carlo samples per acquisition evaluation [default: 128].
    #[arg(long = "mc-samples")]
    pub mc_samples: Option<usize>,
    /// Grid size M of the nested method [default: 512].
    #[arg(long = "grid-size")]
    pub grid_size: Option<usize>,
    /// Hyperparameter restarts per GP fit [default: 8].
    #[arg(long = "fit-restarts")]
    pub fit_restarts: Option<usize>,
    /// Output directory [default: results].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Write zero wall-clock times so traces are byte-reproducible.
    #[arg(long = "no-timing")]
    pub no_timing: bool,
    /// TOML file with any of the keys above (dashes become underscores).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    problem: Option<String>,
    method: Option<String>,
    horizon: Option<usize>,
    iterations: Option<usize>,
    init_points: Option<usize>,
    seeds: Option<usize>,
    first_seed: Option<u64>,
    mc_samples: Option<usize>,
    grid_size: Option<usize>,
    fit_restarts: Option<usize>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    timing: Option<bool>,
}

/// A resolved campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    /// Run settings shared by all seeds; `seed` is overwritten per run.
    pub template: RunConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

/// Parses a full argument vector (program name first).
pub fn parse_args<I, T>(argv: I) -> Result<CampaignSpec>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Config(e.to_string()))?;
    spec_from_cli(&cli)
}

/// Merges flags over the optional config file and validates the result.
pub fn spec_from_cli(cli: &Cli) -> Result<CampaignSpec> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            toml::from_str::<FileConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let defaults = RunConfig::default();
    let problem = cli.problem.clone().or(file.problem).unwrap_or(defaults.problem);
    make_problem(&problem)?;
    let method: Method = cli
        .method
        .clone()
        .or(file.method)
        .as_deref()
        .unwrap_or("ehvi")
        .parse()?;
    let template = RunConfig {
        problem,
        method,
        horizon_cap: cli.horizon.or(file.horizon).unwrap_or(defaults.horizon_cap),
        iterations: cli.iterations.or(file.iterations).unwrap_or(defaults.iterations),
        init_points: cli.init_points.or(file.init_points).unwrap_or(defaults.init_points),
        mc_samples: cli.mc_samples.or(file.mc_samples).unwrap_or(defaults.mc_samples),
        grid_size: cli.grid_size.or(file.grid_size).unwrap_or(defaults.grid_size),
        fit_restarts: cli.fit_restarts.or(file.fit_restarts).unwrap_or(defaults.fit_restarts),
        seed: 0,
        record_timing: !cli.no_timing && file.timing.unwrap_or(true),
    };
    template.validate()?;
    let n_seeds = cli.seeds.or(file.seeds).unwrap_or(15);
    if n_seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()));
    }
    let first = cli.first_seed.or(file.first_seed).unwrap_or(0);
    let jobs = cli
        .jobs
        .or(file.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    Ok(CampaignSpec {
        template,
        seeds: (first..first + n_seeds as u64).collect(),
        out_dir: cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("results")),
        jobs,
    })
}

/// Per-iteration aggregate across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub iteration: usize,
    pub n_runs: usize,
    pub hv_median: f64,
    pub hv_q25: f64,
    pub hv_q75: f64,
    pub wall_seconds_mean: f64,
}

/// Outcome of a campaign.
#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub records: Vec<RunRecord>,
    pub failures: Vec<(u64, String)>,
    pub summary: Vec<SummaryRow>,
}

impl CampaignReport {
    /// 0 when at least one seed succeeded, 2 when all failed.
    pub fn exit_code(&self) -> i32 {
        if self.records.is_empty() {
            2
        } else {
            0
        }
    }
}

pub fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("{TRACE_PREFIX}{seed}.csv"))
}

/// Runs every seed and writes traces, summary and metadata.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignReport> {
    fs::create_dir_all(&spec.out_dir)?;
    let started = unix_now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let problem = make_problem(&spec.template.problem)?;

    let results: Vec<(u64, Result<RunRecord>)> = pool.install(|| {
        spec.seeds
            .par_iter()
            .map(|&seed| {
                let cfg = RunConfig {
                    seed,
                    ..spec.template.clone()
                };
                let rec = run_bo(&cfg).and_then(|rec| {
                    write_trace(&trace_path(&spec.out_dir, seed), &rec, &problem)?;
                    Ok(rec)
                });
                (seed, rec)
            })
            .collect()
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    let errors_path = spec.out_dir.join(ERRORS_FILE);
    if failures.is_empty() {
        if errors_path.exists() {
            fs::remove_file(&errors_path)?;
        }
    } else {
        let text: String = failures.iter().map(|(s, e)| format!("seed {s}: {e}\n")).collect();
        fs::write(&errors_path, text)?;
    }

    let traces: Vec<Vec<(usize, f64, f64)>> = records
        .iter()
        .map(|r| {
            r.rows
                .iter()
                .map(|row| (row.iteration, row.hypervolume, row.wall_seconds))
                .collect()
        })
        .collect();
    let summary = summarize(&traces);
    write_summary(&spec.out_dir.join(SUMMARY_FILE), &summary)?;
    write_meta(spec, started, failures.len())?;
    Ok(CampaignReport {
        records,
        failures,
        summary,
    })
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_trace(path: &Path, rec: &RunRecord, problem: &crate::benchmarks::Problem) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![
        "seed".to_string(),
        "iteration".into(),
        "hypervolume".into(),
        "wall_seconds".into(),
    ];
    header.extend((1..=problem.d).map(|i| format!("x{i}")));
    header.extend((1..=problem.k).map(|i| format!("y{i}")));
    w.write_record(&header)?;
    for row in &rec.rows {
        let mut fields = vec![
            rec.seed.to_string(),
            row.iteration.to_string(),
            row.hypervolume.to_string(),
            row.wall_seconds.to_string(),
        ];
        fields.extend(row.x_native.iter().map(f64::to_string));
        fields.extend(row.y.iter().map(|v| (-v).to_string()));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Aggregates `(iteration, hypervolume, wall_seconds)` traces per iteration.
pub fn summarize(traces: &[Vec<(usize, f64, f64)>]) -> Vec<SummaryRow> {
    let mut by_iter: BTreeMap<usize, (Vec<f64>, f64)> = BTreeMap::new();
    for trace in traces {
        for &(it, hv, wall) in trace {
            let e = by_iter.entry(it).or_default();
            e.0.push(hv);
            e.1 += wall;
        }
    }
    by_iter
        .into_iter()
        .map(|(iteration, (mut hvs, wall))| {
            hvs.sort_by(f64::total_cmp);
            SummaryRow {
                iteration,
                n_runs: hvs.len(),
                hv_median: quantile(&hvs, 0.5),
                hv_q25: quantile(&hvs, 0.25),
                hv_q75: quantile(&hvs, 0.75),
                wall_seconds_mean: wall / hvs.len() as f64,
            }
        })
        .collect()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "iteration",
        "n_runs",
        "hv_median",
        "hv_q25",
        "hv_q75",
        "wall_seconds_mean",
    ])?;
    for r in rows {
        w.write_record(&[
            r.iteration.to_string(),
            r.n_runs.to_string(),
            r.hv_median.to_string(),
            r.hv_q25.to_string(),
            r.hv_q75.to_string(),
            r.wall_seconds_mean.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `(iteration, hypervolume, wall_seconds)` rows from a trace file.
pub fn read_trace(path: &Path) -> Result<Vec<(usize, f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let bad = |what: &str| Error::Config(format!("{}: malformed {what}", path.display()));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let it = rec
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("iteration"))?;
        let hv = rec
            .get(2)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("hypervolume"))?;
        let wall = rec
            .get(3)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("wall_seconds"))?;
        rows.push((it, hv, wall));
    }
    Ok(rows)
}

/// Recomputes the summary from every trace file in `dir`.
pub fn summary_from_traces(dir: &Path) -> Result<Vec<SummaryRow>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with(TRACE_PREFIX) && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    let traces = paths.iter().map(|p| read_trace(p)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(&traces))
}

fn write_meta(spec: &CampaignSpec, started: u64, n_failed: usize) -> Result<()> {
    let t = &spec.template;
    let seeds: Vec<String> = spec.seeds.iter().map(u64::to_string).collect();
    let lines = [
        ("toolkit_version", env!("CARGO_PKG_VERSION").to_string()),
        ("problem", t.problem.clone()),
        ("method", t.method.to_string()),
        ("horizon", t.horizon_cap.to_string()),
        ("iterations", t.iterations.to_string()),
        ("init_points", t.init_points.to_string()),
        ("mc_samples", t.mc_samples.to_string()),
        ("grid_size", t.grid_size.to_string()),
        ("fit_restarts", t.fit_restarts.to_string()),
        ("timing", t.record_timing.to_string()),
        ("seeds", seeds.join(",")),
        ("jobs", spec.jobs.to_string()),
        ("failed_runs", n_failed.to_string()),
        ("started_unix", started.to_string()),
        ("finished_unix", unix_now().to_string()),
    ];
    let text: String = lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    fs::write(spec.out_dir.join(META_FILE), text)?;
    Ok(())
}
