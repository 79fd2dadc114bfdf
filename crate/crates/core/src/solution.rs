//! JSON export of an optimized solution.
//!
//! Schema (all keys required):
//!
//! ```text
//! format      "sensesend-solution"
//! version     1
//! config      scenario config; regenerates the instance
//! itsso       optimizer settings
//! scheme      "itsso" | "nc" | "fsl"
//! t_max       objective, slots
//! completion  per-UAV completion slot
//! history     objective of the initial solution and of every iteration
//! plans       per UAV: uav, start, tasks (ids of the scheme's instance),
//!             sensing (one point per task), legs (start, end, residual_data,
//!             waypoints, turning_point, detour_slots, route_slots), tail
//! schedule    capacity and grants (UAV ids granted in slot t at index t-1)
//! ```
//!
//! Points are `{"x":..,"y":..,"z":..}` in meters. Replaying `plans` with the
//! recorded `schedule` reproduces the trace.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itsso::{scheme_scenario, ItssoConfig, ItssoRun};
use crate::plan::UavPlan;
use crate::scenario::{generate_scenario, Scenario, ScenarioConfig, Scheme};
use crate::scheduler::Schedule;

pub const FORMAT: &str = "sensesend-solution";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub format: String,
    pub version: u32,
    pub config: ScenarioConfig,
    pub itsso: ItssoConfig,
    pub scheme: Scheme,
    pub t_max: u32,
    pub completion: Vec<u32>,
    pub history: Vec<u32>,
    pub plans: Vec<UavPlan>,
    pub schedule: Schedule,
}

impl SolutionFile {
    pub fn new(config: ScenarioConfig, itsso: ItssoConfig, run: &ItssoRun) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            config: ScenarioConfig { scheme: run.solution.scheme, ..config },
            itsso,
            scheme: run.solution.scheme,
            t_max: run.solution.t_max,
            completion: run.solution.completion.clone(),
            history: run.history.clone(),
            plans: run.solution.plans.clone(),
            schedule: run.solution.schedule.clone(),
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let f: SolutionFile = serde_json::from_reader(input)
            .map_err(|e| Error::Parse { line: e.line(), reason: e.to_string() })?;
        if f.format != FORMAT || f.version != VERSION {
            return Err(Error::Parse {
                line: 1,
                reason: format!("unsupported solution format {} v{}", f.format, f.version),
            });
        }
        Ok(f)
    }

    /// The instance the solution was computed on, as seen by its scheme.
    pub fn scenario(&self) -> Result<Scenario> {
        let base = generate_scenario(&self.config)?;
        Ok(scheme_scenario(&base, self.scheme))
    }
}
