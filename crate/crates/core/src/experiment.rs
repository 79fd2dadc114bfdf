//! Seeded Monte Carlo sweeps behind the figure experiments.
//!
//! Instance `i` of a sweep point uses scenario seed `base.seed + i`, so all
//! schemes at a point see the same instances. Instances run in parallel and
//! are reduced in index order.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itsso::{solve, ItssoConfig};
use crate::scenario::{generate_scenario, ScenarioConfig, Scheme};
use crate::sensing::{min_cooperative_uavs, SensingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    /// Completion time against the number of workers per task.
    Workers,
    /// Completion time against the number of tasks per UAV.
    TasksPerUav,
    /// Completion time against the sensing threshold.
    Threshold,
    /// Completion time against the data size per task.
    DataSize,
    /// Minimum group size against the sensing threshold.
    MinWorkers,
    /// Completion time against the subcarrier count for several data sizes.
    Subcarriers,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [
        ExperimentId::Workers,
        ExperimentId::TasksPerUav,
        ExperimentId::Threshold,
        ExperimentId::DataSize,
        ExperimentId::MinWorkers,
        ExperimentId::Subcarriers,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::Workers => "fig4",
            ExperimentId::TasksPerUav => "fig5",
            ExperimentId::Threshold => "fig6",
            ExperimentId::DataSize => "fig7",
            ExperimentId::MinWorkers => "fig8",
            ExperimentId::Subcarriers => "fig9",
        }
    }

    pub fn variable(&self) -> &'static str {
        match self {
            ExperimentId::Workers => "workers_per_task",
            ExperimentId::TasksPerUav => "tasks_per_uav",
            ExperimentId::Threshold => "sensing.threshold",
            ExperimentId::DataSize => "data_size",
            ExperimentId::MinWorkers => "sensing.threshold",
            ExperimentId::Subcarriers => "subcarriers",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "fig4" | "q" | "workers" => ExperimentId::Workers,
            "fig5" | "ni" | "tasks-per-uav" => ExperimentId::TasksPerUav,
            "fig6" | "prth" | "threshold" => ExperimentId::Threshold,
            "fig7" | "rs" | "data-size" => ExperimentId::DataSize,
            "fig8" | "minq" | "min-workers" => ExperimentId::MinWorkers,
            "fig9" | "k" | "subcarriers" => ExperimentId::Subcarriers,
            _ => {
                return Err(Error::Config(format!(
                    "unknown experiment `{s}` (expected one of fig4..fig9)"
                )))
            }
        })
    }
}

/// One sweep point: a label, the x value, and the scenario to draw from.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub series: String,
    pub scheme: Option<Scheme>,
    pub x: f64,
    pub config: ScenarioConfig,
}

/// Summary row of the experiment CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub scheme: String,
    pub x: f64,
    #[serde(rename = "mean_Tmax")]
    pub mean_t_max: f64,
    #[serde(rename = "std_Tmax")]
    pub std_t_max: f64,
    pub n: usize,
}

/// Per-instance value behind a summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub scheme: String,
    pub x: f64,
    pub instance: usize,
    pub seed: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub id: ExperimentId,
    pub rows: Vec<ExperimentRow>,
    pub raw: Vec<RawRow>,
    /// Human-readable record of the resolved parameters.
    pub manifest: Vec<String>,
}

impl ExperimentResult {
    pub fn row(&self, scheme: &str, x: f64) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.scheme == scheme && (r.x - x).abs() < 1e-9 * x.abs().max(1.0))
    }

    pub fn series(&self, scheme: &str) -> Vec<&ExperimentRow> {
        self.rows.iter().filter(|r| r.scheme == scheme).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_raw_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.raw {
            w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<id>.csv`, `<id>_raw.csv` and `<id>_manifest.txt` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let name = self.id.name();
        let main = dir.join(format!("{name}.csv"));
        let raw = dir.join(format!("{name}_raw.csv"));
        let manifest = dir.join(format!("{name}_manifest.txt"));
        self.write_csv(std::fs::File::create(&main)?)?;
        self.write_raw_csv(std::fs::File::create(&raw)?)?;
        let mut f = std::fs::File::create(&manifest)?;
        for line in &self.manifest {
            writeln!(f, "{line}")?;
        }
        Ok(vec![main, raw, manifest])
    }
}

/// Sweep settings shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSpec {
    pub base: ScenarioConfig,
    pub instances: usize,
    pub itsso: ItssoConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self { base: ScenarioConfig::default(), instances: 200, itsso: ItssoConfig::default() }
    }
}

fn schemed(series: &[Scheme], x: f64, config: ScenarioConfig) -> Vec<SweepPoint> {
    series
        .iter()
        .map(|&s| SweepPoint { series: s.as_str().to_string(), scheme: Some(s), x, config })
        .collect()
}

/// The sweep points of experiment `id` around `base`.
pub fn sweep_points(id: ExperimentId, base: &ScenarioConfig) -> Vec<SweepPoint> {
    let mut pts = Vec::new();
    match id {
        ExperimentId::Workers => {
            for q in 1..=8 {
                let c = ScenarioConfig { tasks: 20, workers_per_task: q, uavs: 20 * q / 4, ..*base };
                pts.extend(schemed(&[Scheme::Itsso], q as f64, c));
            }
        }
        ExperimentId::TasksPerUav => {
            for ni in [2usize, 4, 6, 8] {
                let c = ScenarioConfig { uavs: 20, workers_per_task: 4, tasks: 20 * ni / 4, ..*base };
                pts.extend(schemed(&[Scheme::Itsso, Scheme::Nc], ni as f64, c));
            }
        }
        ExperimentId::Threshold => {
            for pr in [0.5, 0.6, 0.7, 0.8, 0.9] {
                let c = ScenarioConfig { sensing: SensingParams { threshold: pr, ..base.sensing }, ..*base };
                pts.extend(schemed(&Scheme::ALL, pr, c));
            }
        }
        ExperimentId::DataSize => {
            for mbit in [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0] {
                let c = ScenarioConfig { data_size: mbit * 1e6, ..*base };
                pts.extend(schemed(&[Scheme::Itsso], mbit, c));
            }
        }
        ExperimentId::MinWorkers => {
            for k in 1..=6 {
                let pr = 1.0 - 10f64.powi(-k);
                let c = ScenarioConfig { sensing: SensingParams { threshold: pr, ..base.sensing }, ..*base };
                for series in ["simulated", "theory"] {
                    pts.push(SweepPoint { series: series.into(), scheme: None, x: pr, config: c });
                }
            }
        }
        ExperimentId::Subcarriers => {
            for mbit in [10.0, 20.0, 30.0] {
                for k in 1..=10 {
                    let c = ScenarioConfig { subcarriers: k, data_size: mbit * 1e6, ..*base };
                    pts.push(SweepPoint {
                        series: format!("itsso_rs{mbit}"),
                        scheme: Some(Scheme::Itsso),
                        x: k as f64,
                        config: c,
                    });
                }
            }
        }
    }
    pts
}

/// Bernoulli trials per instance of the minimum-group-size estimate.
pub const MIN_WORKER_TRIALS: usize = 20_000;

/// Minimum group size from a Monte Carlo estimate of single-UAV success at
/// sensing distance `d0`.
pub fn simulated_min_workers(d0: f64, sensing: &SensingParams, seed: u64, trials: usize) -> u32 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (-sensing.lambda * d0).exp();
    let hits = (0..trials).filter(|_| rng.gen::<f64>() < p).count();
    let p_hat = (hits as f64 / trials as f64).clamp(1e-12, 1.0 - 1e-12);
    min_cooperative_uavs_from_single(p_hat, sensing.threshold)
}

fn min_cooperative_uavs_from_single(p: f64, threshold: f64) -> u32 {
    let mut q = 1u32;
    while 1.0 - (1.0 - p).powi(q as i32) < threshold && q < 10_000 {
        q += 1;
    }
    q
}

/// Value of one instance at one sweep point.
pub fn instance_value(point: &SweepPoint, seed: u64, itsso: &ItssoConfig) -> Result<f64> {
    let cfg = ScenarioConfig { seed, ..point.config };
    match point.scheme {
        Some(scheme) => {
            let scenario = generate_scenario(&cfg)?;
            let (_, run) = solve(&scenario, scheme, &ItssoConfig { rng_seed: seed, ..*itsso })?;
            Ok(run.solution.t_max as f64)
        }
        None => {
            let d0 = cfg.kinematics.h_min;
            Ok(if point.series == "theory" {
                min_cooperative_uavs(d0, &cfg.sensing) as f64
            } else {
                simulated_min_workers(d0, &cfg.sensing, seed, MIN_WORKER_TRIALS) as f64
            })
        }
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs every point of `points` over `spec.instances` seeds.
pub fn run_points(id: ExperimentId, points: &[SweepPoint], spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.instances == 0 {
        return Err(Error::Config("instances must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(points.len());
    let mut raw = Vec::new();
    let mut manifest = vec![
        format!("experiment = {}", id.name()),
        format!("variable = {}", id.variable()),
        format!("instances = {}", spec.instances),
        format!("base_seed = {}", spec.base.seed),
        "rng = ChaCha8, instance seed = base_seed + instance".to_string(),
        format!("itsso.initial_speed_ratio = {}", spec.itsso.initial_speed_ratio),
        format!("itsso.max_iterations = {}", spec.itsso.max_iterations),
    ];
    for p in points {
        let c = &p.config;
        manifest.push(format!(
            "point series={} x={} uavs={} tasks={} workers_per_task={} tasks_per_uav={} subcarriers={} \
             threshold={} data_size={}",
            p.series,
            p.x,
            c.uavs,
            c.tasks,
            c.workers_per_task,
            c.tasks * c.workers_per_task / c.uavs,
            c.subcarriers,
            c.sensing.threshold,
            c.data_size
        ));
        let values: Vec<f64> = (0..spec.instances)
            .into_par_iter()
            .map(|i| instance_value(p, spec.base.seed + i as u64, &spec.itsso))
            .collect::<Result<_>>()?;
        let (mean, std) = mean_std(&values);
        rows.push(ExperimentRow { scheme: p.series.clone(), x: p.x, mean_t_max: mean, std_t_max: std, n: values.len() });
        for (i, v) in values.into_iter().enumerate() {
            raw.push(RawRow { scheme: p.series.clone(), x: p.x, instance: i, seed: spec.base.seed + i as u64, value: v });
        }
    }
    Ok(ExperimentResult { id, rows, raw, manifest })
}

pub fn run_experiment(id: ExperimentId, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.base.validate()?;
    run_points(id, &sweep_points(id, &spec.base), spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("fig10".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn sweep_points_are_divisible() {
        let base = ScenarioConfig::default();
        for id in ExperimentId::ALL {
            for p in sweep_points(id, &base) {
                p.config.validate().unwrap();
            }
        }
        let q = sweep_points(ExperimentId::Workers, &base);
        assert_eq!(q.len(), 8);
        assert!(q.iter().all(|p| p.config.tasks * p.config.workers_per_task / p.config.uavs == 4));
    }

    #[test]
    fn min_workers_theory_matches_example() {
        let base = ScenarioConfig::default();
        let pts = sweep_points(ExperimentId::MinWorkers, &base);
        let spec = ExperimentSpec { instances: 3, ..Default::default() };
        let r = run_points(ExperimentId::MinWorkers, &pts, &spec).unwrap();
        let theory: Vec<f64> = r.series("theory").iter().map(|r| r.mean_t_max).collect();
        assert_eq!(theory, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn mean_std_basic() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }
}
