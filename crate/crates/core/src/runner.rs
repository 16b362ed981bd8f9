//! Experiment pipelines behind the command-line front end.
//!
//! Every pipeline returns its outputs as in-memory [`Artifact`]s; writing them
//! out is left to [`write_artifacts`]. Per-sample randomness comes from
//! [`crate::rng::stream`], so sample `k` sees the same noise whatever the batch
//! size or thread count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoise::{Dataset, OptimalDenoiser};
use crate::error::{Error, Result};
use crate::geometry::{pca_reconstruct, GeometryReport};
use crate::gits::{
    build_cost_matrix, build_teacher, DpTable, FineGrid, DEFAULT_GAMMA, DEFAULT_TEACHER_NFE, DEFAULT_WARMUP,
};
use crate::io::Artifact;
use crate::rng::{initial_noise, Purpose};
use crate::schedule::{polynomial_schedule, ScheduleSpec, DEFAULT_RHO};
use crate::solvers::{sample, SolverSpec, Trajectory};
use crate::synthetic::{cube_corners, gmm, plane, GmmParams};
use crate::Vector;

/// Where the data points come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Csv(PathBuf),
    Gmm(GmmParams),
    Plane { m: usize, dim: usize, n: usize },
    Cube { dim: usize, n: usize },
}

impl DatasetSource {
    /// Synthetic sets draw from `seed`; CSV files are read from disk.
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSource::Csv(path) => Dataset::from_csv_path(path),
            DatasetSource::Gmm(p) => gmm(p, seed),
            DatasetSource::Plane { m, dim, n } => plane(*m, *dim, *n, seed),
            DatasetSource::Cube { dim, n } => cube_corners(*dim, *n, seed),
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Csv(p) => write!(f, "{}", p.display()),
            DatasetSource::Gmm(p) => {
                write!(f, "gmm:modes={},d={},n={},spread={}", p.modes, p.dim, p.per_mode, p.spread)
            }
            DatasetSource::Plane { m, dim, n } => write!(f, "plane:m={m},d={dim},n={n}"),
            DatasetSource::Cube { dim, n } => write!(f, "cube:d={dim},n={n}"),
        }
    }
}

/// `gmm[:modes=2,d=2,n=32,spread=0.1]`, `plane[:m=2,d=512,n=64]`,
/// `cube[:d=1024,n=64]`; anything else is a CSV path.
impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let preset = matches!(head, "gmm" | "plane" | "cube");
        if !preset {
            return Ok(DatasetSource::Csv(PathBuf::from(s)));
        }
        let mut kv = std::collections::BTreeMap::new();
        for item in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in dataset spec, got {item:?}")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str, default: f64| -> Result<f64> {
            match kv.remove(key) {
                Some(v) => v.parse::<f64>().map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}"))),
                None => Ok(default),
            }
        };
        let source = match head {
            "gmm" => DatasetSource::Gmm(GmmParams {
                modes: take("modes", 2.0)? as usize,
                dim: take("d", 2.0)? as usize,
                per_mode: take("n", 32.0)? as usize,
                spread: take("spread", 0.1)?,
            }),
            "plane" => DatasetSource::Plane {
                m: take("m", 2.0)? as usize,
                dim: take("d", 512.0)? as usize,
                n: take("n", 64.0)? as usize,
            },
            _ => DatasetSource::Cube { dim: take("d", 1024.0)? as usize, n: take("n", 64.0)? as usize },
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::Parse(format!("unknown dataset key {k:?} for {head}")));
        }
        Ok(source)
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            fs::write(&path, &a.contents).map_err(|source| Error::Io { path: path.clone(), source })?;
            Ok(path)
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleConfig {
    pub seed: u64,
    pub dataset: DatasetSource,
    pub solver: SolverSpec,
    pub schedule: ScheduleSpec,
    pub batch: usize,
    pub threads: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleSummary {
    pub seed: u64,
    pub dataset: String,
    pub solver: SolverSpec,
    pub times: Vec<f64>,
    pub nfe: usize,
    pub samples: Vec<SampleEndpoints>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleEndpoints {
    pub index: usize,
    pub file: String,
    pub initial_norm: f64,
    pub final_norm: f64,
}

/// Trajectory CSVs `traj_0000.csv, …` plus `summary.json`.
pub fn run_sample(cfg: &SampleConfig) -> Result<Vec<Artifact>> {
    if cfg.batch == 0 {
        return Err(Error::domain("batch must be at least 1"));
    }
    let data = cfg.dataset.load(cfg.seed)?;
    let denoiser = OptimalDenoiser::new(data);
    let schedule = cfg.schedule.build()?;
    let dim = denoiser.dataset().dim();
    let inits: Vec<Vector> = (0..cfg.batch)
        .map(|k| initial_noise(cfg.seed, Purpose::InitialNoise, k as u64, dim, schedule.t_max()))
        .collect();
    let trajs: Vec<Trajectory> = with_threads(cfg.threads, || {
        inits.par_iter().map(|x| sample(&cfg.solver, &denoiser, &schedule, x)).collect::<Result<Vec<_>>>()
    })??;

    let mut artifacts = Vec::with_capacity(trajs.len() + 1);
    let mut samples = Vec::with_capacity(trajs.len());
    for (k, t) in trajs.iter().enumerate() {
        let name = format!("traj_{k:04}.csv");
        samples.push(SampleEndpoints {
            index: k,
            file: name.clone(),
            initial_norm: t.initial().norm(),
            final_norm: t.final_state().norm(),
        });
        artifacts.push(Artifact::new(name, t.to_csv(true)));
    }
    let summary = SampleSummary {
        seed: cfg.seed,
        dataset: cfg.dataset.to_string(),
        solver: cfg.solver,
        times: schedule.times().to_vec(),
        nfe: trajs.first().map_or(0, |t| t.nfe),
        samples,
    };
    artifacts.push(Artifact::new("summary.json", serde_json::to_string_pretty(&summary)? + "\n"));
    Ok(artifacts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GitsConfig {
    pub seed: u64,
    pub dataset: DatasetSource,
    pub teacher: SolverSpec,
    pub teacher_nfe: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub budgets: Vec<usize>,
    pub gamma: f64,
    pub warmup: usize,
    pub dump_costs: bool,
    pub threads: Option<usize>,
}

impl GitsConfig {
    pub fn new(dataset: DatasetSource, budgets: Vec<usize>) -> Self {
        Self {
            seed: 0,
            dataset,
            teacher: SolverSpec::ipndm(4),
            teacher_nfe: DEFAULT_TEACHER_NFE,
            t_min: crate::schedule::DEFAULT_T_MIN,
            t_max: crate::schedule::DEFAULT_T_MAX,
            budgets,
            gamma: DEFAULT_GAMMA,
            warmup: DEFAULT_WARMUP,
            dump_costs: false,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GitsOutput {
    pub seed: u64,
    pub dataset: String,
    pub teacher: SolverSpec,
    pub teacher_nfe: usize,
    pub warmup: usize,
    pub gamma: f64,
    pub grid: Vec<f64>,
    pub schedules: Vec<GitsSchedule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GitsSchedule {
    pub budget: usize,
    pub times: Vec<f64>,
    pub path_indices: Vec<usize>,
    pub total_cost: f64,
}

/// Teacher, cost matrix and one DP fill shared by every requested budget.
pub fn gits_search(
    data: &Dataset,
    fine: &FineGrid,
    warmup: &[Vector],
    budgets: &[usize],
    gamma: f64,
) -> Result<(crate::gits::CostMatrix, Vec<crate::gits::DpResult>)> {
    let max = budgets.iter().copied().max().ok_or_else(|| Error::domain("no budgets requested"))?;
    if max > fine.intervals() {
        return Err(Error::Infeasible { budget: max, intervals: fine.intervals() });
    }
    let denoiser = OptimalDenoiser::new(data.clone());
    let teachers = build_teacher(fine, &denoiser, warmup)?;
    let costs = build_cost_matrix(fine, &denoiser, &teachers)?;
    let table = DpTable::fill(&costs, max, gamma)?;
    let results = budgets.iter().map(|&b| table.extract(b)).collect::<Result<Vec<_>>>()?;
    Ok((costs, results))
}

/// `gits_schedule.json` and, on request, `cost_matrix.csv`.
pub fn run_gits(cfg: &GitsConfig) -> Result<Vec<Artifact>> {
    if cfg.warmup == 0 {
        return Err(Error::domain("warmup must be at least 1"));
    }
    let data = cfg.dataset.load(cfg.seed)?;
    let grid = polynomial_schedule(cfg.teacher_nfe, cfg.t_min, cfg.t_max, DEFAULT_RHO)?;
    let fine = FineGrid::new(grid, cfg.teacher)?;
    let warmup: Vec<Vector> =
        (0..cfg.warmup).map(|k| initial_noise(cfg.seed, Purpose::Warmup, k as u64, data.dim(), cfg.t_max)).collect();
    let (costs, results) = with_threads(cfg.threads, || gits_search(&data, &fine, &warmup, &cfg.budgets, cfg.gamma))??;

    let output = GitsOutput {
        seed: cfg.seed,
        dataset: cfg.dataset.to_string(),
        teacher: cfg.teacher,
        teacher_nfe: cfg.teacher_nfe,
        warmup: cfg.warmup,
        gamma: cfg.gamma,
        grid: fine.times().to_vec(),
        schedules: results
            .into_iter()
            .map(|r| GitsSchedule {
                budget: r.budget(),
                times: r.schedule.times().to_vec(),
                path_indices: r.path_indices,
                total_cost: r.total_cost,
            })
            .collect(),
    };
    let mut artifacts = vec![Artifact::new("gits_schedule.json", serde_json::to_string_pretty(&output)? + "\n")];
    if cfg.dump_costs {
        artifacts.push(Artifact::new("cost_matrix.csv", costs.to_csv()));
    }
    Ok(artifacts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryConfig {
    pub seed: u64,
    pub dataset: DatasetSource,
    pub trajectories: Vec<PathBuf>,
    pub bandwidths: Vec<f64>,
    pub k_max: usize,
}

/// `geometry_XXXX.json`/`.csv` per trajectory and a shared `pca.json`.
pub fn run_geometry(cfg: &GeometryConfig) -> Result<Vec<Artifact>> {
    if cfg.trajectories.is_empty() {
        return Err(Error::domain("no trajectory files given"));
    }
    let data = cfg.dataset.load(cfg.seed)?;
    let mut trajs = Vec::with_capacity(cfg.trajectories.len());
    for path in &cfg.trajectories {
        let traj = Trajectory::from_csv(&read_text(path)?).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if traj.dim() != data.dim() {
            return Err(Error::domain(format!(
                "{} has dimension {} but the dataset has dimension {}",
                path.display(),
                traj.dim(),
                data.dim()
            )));
        }
        trajs.push(traj);
    }
    let mut artifacts = Vec::with_capacity(2 * trajs.len() + 1);
    for (k, t) in trajs.iter().enumerate() {
        let report = GeometryReport::analyze(t, &data, &cfg.bandwidths)?;
        artifacts.push(Artifact::new(format!("geometry_{k:04}.json"), report.to_json()? + "\n"));
        artifacts.push(Artifact::new(format!("geometry_{k:04}.csv"), report.to_csv()));
    }
    let k_max = cfg.k_max.min(trajs.iter().map(Trajectory::len).min().unwrap_or(1).saturating_sub(1)).max(1);
    let pca = pca_reconstruct(&trajs, k_max)?;
    artifacts.push(Artifact::new("pca.json", serde_json::to_string_pretty(&pca)? + "\n"));
    Ok(artifacts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_specs_parse() {
        assert_eq!(
            "gmm:modes=3,d=64".parse::<DatasetSource>().unwrap(),
            DatasetSource::Gmm(GmmParams { modes: 3, dim: 64, per_mode: 32, spread: 0.1 })
        );
        assert_eq!("plane".parse::<DatasetSource>().unwrap(), DatasetSource::Plane { m: 2, dim: 512, n: 64 });
        assert_eq!(
            "data/points.csv".parse::<DatasetSource>().unwrap(),
            DatasetSource::Csv(PathBuf::from("data/points.csv"))
        );
        assert!("gmm:modes".parse::<DatasetSource>().is_err());
        assert!("cube:q=3".parse::<DatasetSource>().is_err());
        let s = DatasetSource::Cube { dim: 8, n: 4 };
        assert_eq!(s.to_string().parse::<DatasetSource>().unwrap(), s);
    }

    #[test]
    fn gits_rejects_infeasible_budget() {
        let mut cfg = GitsConfig::new("gmm".parse().unwrap(), vec![61]);
        cfg.warmup = 2;
        assert!(matches!(run_gits(&cfg), Err(Error::Infeasible { budget: 61, intervals: 60 })));
    }

    #[test]
    fn sample_noise_does_not_depend_on_batch() {
        let base = SampleConfig {
            seed: 3,
            dataset: "gmm".parse().unwrap(),
            solver: SolverSpec::euler(),
            schedule: ScheduleSpec::new(crate::ScheduleKind::Polynomial, 5),
            batch: 1,
            threads: Some(1),
        };
        let one = run_sample(&base).unwrap();
        let three = run_sample(&SampleConfig { batch: 3, ..base.clone() }).unwrap();
        assert_eq!(one[0], three[0]);
        assert_eq!(three.len(), 4);
    }
}
