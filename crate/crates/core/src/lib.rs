//! Simulation and optimization of cooperative sense-and-send UAV networks.
//!
//! A set of UAVs senses ground tasks in fixed cooperative groups and uploads
//! the collected data to one base station over a limited pool of
//! subcarriers. The crate models the air-to-ground channel, plans
//! trajectories and sensing locations, schedules subcarriers slot by slot
//! and minimizes the time at which the last UAV finishes.

pub mod analysis;
pub mod audit;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod itsso;
pub mod placement;
pub mod plan;
pub mod scenario;
pub mod scheduler;
pub mod sensing;
pub mod simulator;
pub mod solution;
pub mod trace;
pub mod trajectory;

pub use channel::{Channel, ChannelParams};
pub use error::{Error, Result};
pub use geometry::Position3;
pub use itsso::{run_itsso, solve, ItssoConfig, ItssoRun, Solution};
pub use plan::{ModelOptions, UavPlan};
pub use scenario::{generate_scenario, Scenario, ScenarioConfig, Scheme};
pub use scheduler::{GreedyScheduler, RandomScheduler, Schedule, Scheduler};
pub use sensing::{SensingParams, Task};
pub use simulator::{SimOptions, SimOutcome, SlotType, TraceRecord};
pub use trajectory::{KinematicParams, Planner};
