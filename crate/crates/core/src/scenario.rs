//! Scenario configuration and random instance generation.
//!
//! Instances are drawn with ChaCha8 seeded from a 64-bit integer, so they are
//! reproducible across platforms.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelParams};
use crate::error::{Error, Result};
use crate::geometry::Position3;
use crate::plan::ModelOptions;
use crate::sensing::{SensingParams, Task};
use crate::trajectory::KinematicParams;

/// Optimization scheme applied to a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Cooperative sensing with joint trajectory, location and scheduling optimization.
    #[default]
    Itsso,
    /// Every UAV senses each of its tasks alone.
    Nc,
    /// Sensing locations pinned at a fixed height, no sensing-probability constraint.
    Fsl,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Itsso, Scheme::Nc, Scheme::Fsl];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Itsso => "itsso",
            Scheme::Nc => "nc",
            Scheme::Fsl => "fsl",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "itsso" => Ok(Scheme::Itsso),
            "nc" => Ok(Scheme::Nc),
            "fsl" => Ok(Scheme::Fsl),
            _ => Err(Error::Config(format!("unknown scheme `{s}` (expected itsso, nc or fsl)"))),
        }
    }
}

/// Extent of the deployment box, meters. The ground rectangle is
/// `[0, x] x [0, y]`; UAVs start anywhere below `z` (and above `h_min`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Area {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Area {
    fn default() -> Self {
        Self { x: 500.0, y: 500.0, z: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Number of UAVs.
    pub uavs: usize,
    /// Number of tasks.
    pub tasks: usize,
    /// Subcarriers available per slot.
    pub subcarriers: usize,
    /// Workers per task.
    pub workers_per_task: usize,
    pub area: Area,
    pub channel: ChannelParams,
    pub sensing: SensingParams,
    pub kinematics: KinematicParams,
    /// Bits collected per task.
    pub data_size: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Sensing altitude of the fixed-location baseline, meters.
    pub fsl_height: f64,
    /// Count the sensing slot's uplink toward that task's data.
    pub transmit_in_sensing_slot: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            uavs: 20,
            tasks: 20,
            subcarriers: 10,
            workers_per_task: 4,
            area: Area::default(),
            channel: ChannelParams::default(),
            sensing: SensingParams::default(),
            kinematics: KinematicParams::default(),
            data_size: 20.0e6,
            seed: 0,
            scheme: Scheme::Itsso,
            fsl_height: 50.0,
            transmit_in_sensing_slot: false,
        }
    }
}

impl ScenarioConfig {
    /// Tasks per UAV under the equal split.
    pub fn tasks_per_uav(&self) -> Result<usize> {
        self.validate()?;
        Ok(self.tasks * self.workers_per_task / self.uavs)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("uavs", self.uavs),
            ("tasks", self.tasks),
            ("subcarriers", self.subcarriers),
            ("workers_per_task", self.workers_per_task),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("`{name}` must be at least 1")));
            }
        }
        if self.workers_per_task > self.uavs {
            return Err(Error::Config(format!(
                "`workers_per_task` = {} exceeds `uavs` = {}",
                self.workers_per_task, self.uavs
            )));
        }
        if (self.tasks * self.workers_per_task) % self.uavs != 0 {
            return Err(Error::Config(format!(
                "tasks * workers_per_task = {} is not divisible by uavs = {}",
                self.tasks * self.workers_per_task,
                self.uavs
            )));
        }
        for (name, v) in [("area.x", self.area.x), ("area.y", self.area.y), ("area.z", self.area.z)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("`{name}` must be finite and >= 0, got {v}")));
            }
        }
        if !(self.data_size.is_finite() && self.data_size > 0.0) {
            return Err(Error::Config(format!("`data_size` must be > 0, got {}", self.data_size)));
        }
        if !(self.fsl_height.is_finite() && self.fsl_height >= self.kinematics.h_min) {
            return Err(Error::Config(format!(
                "`fsl_height` must be >= h_min = {}, got {}",
                self.kinematics.h_min, self.fsl_height
            )));
        }
        self.channel.validate()?;
        self.sensing.validate()?;
        self.kinematics.validate()?;
        Ok(())
    }

    /// Parses the key-value text format (TOML); unknown keys are rejected.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model(&self) -> ModelOptions {
        ModelOptions { transmit_in_sensing_slot: self.transmit_in_sensing_slot }
    }
}

/// A generated problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub uav_starts: Vec<Position3>,
    pub tasks: Vec<Task>,
    /// Visit order of task ids per UAV.
    pub assignments: Vec<Vec<usize>>,
    pub capacity: usize,
}

impl Scenario {
    pub fn channel(&self) -> Result<Channel> {
        Channel::new(self.config.channel)
    }

    pub fn sensing(&self) -> &SensingParams {
        &self.config.sensing
    }

    pub fn kinematics(&self) -> &KinematicParams {
        &self.config.kinematics
    }

    pub fn uavs(&self) -> usize {
        self.uav_starts.len()
    }

    /// Position of `task` in the visit order of `uav`.
    pub fn task_index(&self, uav: usize, task: usize) -> Option<usize> {
        self.assignments[uav].iter().position(|&t| t == task)
    }

    /// The same instance with every (UAV, task) visit turned into a task of
    /// its own, sensed by that UAV alone.
    pub fn non_cooperative(&self) -> Scenario {
        let mut tasks = Vec::new();
        let mut assignments = Vec::with_capacity(self.assignments.len());
        for (uav, list) in self.assignments.iter().enumerate() {
            let mut own = Vec::with_capacity(list.len());
            for &t in list {
                let src = &self.tasks[t];
                own.push(tasks.len());
                tasks.push(Task {
                    id: tasks.len(),
                    location: src.location,
                    data_size: src.data_size,
                    workers: vec![uav],
                });
            }
            assignments.push(own);
        }
        let mut config = self.config;
        config.tasks = tasks.len();
        config.workers_per_task = 1;
        config.scheme = Scheme::Nc;
        Scenario { config, uav_starts: self.uav_starts.clone(), tasks, assignments, capacity: self.capacity }
    }
}

/// Draws a scenario from `config`.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let m = config.uavs;
    let n = config.tasks;
    let q = config.workers_per_task;
    let ni = n * q / m;
    let h_min = config.kinematics.h_min;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let uniform = |rng: &mut ChaCha8Rng, hi: f64| if hi > 0.0 { rng.gen_range(0.0..hi) } else { 0.0 };

    let uav_starts: Vec<Position3> = (0..m)
        .map(|_| {
            let x = uniform(&mut rng, config.area.x);
            let y = uniform(&mut rng, config.area.y);
            let z = uniform(&mut rng, config.area.z).max(h_min);
            Position3::new(x, y, z)
        })
        .collect();
    let locations: Vec<Position3> = (0..n)
        .map(|_| {
            let x = uniform(&mut rng, config.area.x);
            let y = uniform(&mut rng, config.area.y);
            Position3::ground(x, y)
        })
        .collect();

    let mut pool: Vec<usize> = (0..n).flat_map(|t| std::iter::repeat(t).take(q)).collect();
    pool.shuffle(&mut rng);
    let mut assignments: Vec<Vec<usize>> = pool.chunks(ni).map(<[usize]>::to_vec).collect();
    repair_duplicates(&mut assignments, &mut rng)?;

    let mut workers = vec![Vec::with_capacity(q); n];
    for (uav, list) in assignments.iter().enumerate() {
        for &t in list {
            workers[t].push(uav);
        }
    }
    let tasks = locations
        .into_iter()
        .zip(workers)
        .enumerate()
        .map(|(id, (location, workers))| Task { id, location, data_size: config.data_size, workers })
        .collect();
    Ok(Scenario { config: *config, uav_starts, tasks, assignments, capacity: config.subcarriers })
}

/// Swaps entries between UAVs until no UAV holds the same task twice.
fn repair_duplicates(assignments: &mut [Vec<usize>], rng: &mut ChaCha8Rng) -> Result<()> {
    let m = assignments.len();
    for _round in 0..10_000 {
        let Some((a, ia)) = find_duplicate(assignments) else { return Ok(()) };
        let task = assignments[a][ia];
        let b = rng.gen_range(0..m);
        if b == a || assignments[b].contains(&task) {
            continue;
        }
        let ib = rng.gen_range(0..assignments[b].len());
        let other = assignments[b][ib];
        if assignments[a].contains(&other) {
            continue;
        }
        assignments[a][ia] = other;
        assignments[b][ib] = task;
    }
    Err(Error::Config("could not assign tasks to distinct workers".into()))
}

fn find_duplicate(assignments: &[Vec<usize>]) -> Option<(usize, usize)> {
    for (u, list) in assignments.iter().enumerate() {
        for i in 1..list.len() {
            if list[..i].contains(&list[i]) {
                return Some((u, i));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let cfg = ScenarioConfig { seed: 42, ..Default::default() };
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = generate_scenario(&ScenarioConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.uav_starts, c.uav_starts);
    }

    #[test]
    fn equal_split_and_distinct_workers() {
        for seed in 0..50 {
            let cfg = ScenarioConfig { seed, ..Default::default() };
            let s = generate_scenario(&cfg).unwrap();
            for list in &s.assignments {
                assert_eq!(list.len(), 4);
                let mut l = list.clone();
                l.sort_unstable();
                l.dedup();
                assert_eq!(l.len(), 4);
            }
            for t in &s.tasks {
                assert_eq!(t.workers.len(), 4);
                assert_eq!(t.location.z, 0.0);
            }
            for p in &s.uav_starts {
                assert!(p.z >= 10.0 && p.z <= 100.0);
            }
        }
    }

    #[test]
    fn single_worker_topology() {
        let cfg = ScenarioConfig { workers_per_task: 1, uavs: 5, ..Default::default() };
        let s = generate_scenario(&cfg).unwrap();
        assert!(s.tasks.iter().all(|t| t.workers.len() == 1));
    }

    #[test]
    fn task_x_mean() {
        let cfg = ScenarioConfig { tasks: 10_000, uavs: 10_000, workers_per_task: 1, ..Default::default() };
        let s = generate_scenario(&cfg).unwrap();
        let mean = s.tasks.iter().map(|t| t.location.x).sum::<f64>() / 10_000.0;
        assert!((mean - 250.0).abs() < 5.0, "{mean}");
    }

    #[test]
    fn divisibility_violation() {
        let cfg = ScenarioConfig { uavs: 7, ..Default::default() };
        assert!(matches!(generate_scenario(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn non_cooperative_keeps_geometry() {
        let s = generate_scenario(&ScenarioConfig { seed: 3, ..Default::default() }).unwrap();
        let nc = s.non_cooperative();
        assert_eq!(nc.tasks.len(), 80);
        assert_eq!(nc.uav_starts, s.uav_starts);
        for (u, list) in nc.assignments.iter().enumerate() {
            for (k, &t) in list.iter().enumerate() {
                assert_eq!(nc.tasks[t].workers, vec![u]);
                assert_eq!(nc.tasks[t].location, s.tasks[s.assignments[u][k]].location);
            }
        }
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let cfg = ScenarioConfig { seed: 9, scheme: Scheme::Fsl, ..Default::default() };
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert!(ScenarioConfig::from_toml("uavs = 20\nbogus = 1\n").is_err());
        assert!(ScenarioConfig::from_toml("[channel]\nbs_hieght = 3\n").is_err());
        let partial = ScenarioConfig::from_toml("tasks = 10\nuavs = 10\n").unwrap();
        assert_eq!(partial.subcarriers, 10);
    }
}
