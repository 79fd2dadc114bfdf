//! The outer iterative optimizer and the two baselines.
//!
//! Every iteration re-plans all legs at full speed from the previous run's
//! grants, then moves sensing locations, then schedules greedily; the
//! simulator decides the objective after each step. A step whose simulated
//! maximum completion time is worse than the current one is discarded, so
//! the objective never increases between iterations.

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{domain, Error, Result};
use crate::geometry::Position3;
use crate::placement::{optimize_sensing_locations, PlacementParams, PlacementReport};
use crate::plan::{build_plan, leg_residual, UavMasks, UavPlan};
use crate::scenario::{Scenario, Scheme};
use crate::scheduler::{GreedyScheduler, RandomScheduler, Schedule};
use crate::sensing::group_success;
use crate::simulator::{observed_masks, run, SimOptions, SimOutcome};
use crate::trajectory::{straight_waypoints, GrantMask, Leg, Planner};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ItssoConfig {
    /// Speed of the initial legs as a fraction of `v_max`.
    pub initial_speed_ratio: f64,
    pub max_iterations: usize,
    /// Seed of the random scheduler used by the initial solution.
    pub rng_seed: u64,
}

impl Default for ItssoConfig {
    fn default() -> Self {
        Self { initial_speed_ratio: 0.2, max_iterations: 100, rng_seed: 0 }
    }
}

impl ItssoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_speed_ratio > 0.0 && self.initial_speed_ratio <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "initial_speed_ratio",
                reason: format!("must lie in (0, 1], got {}", self.initial_speed_ratio),
            });
        }
        Ok(())
    }
}

/// Plans, schedule and objective of one feasible solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub scheme: Scheme,
    pub plans: Vec<UavPlan>,
    pub schedule: Schedule,
    pub completion: Vec<u32>,
    pub t_max: u32,
}

impl Solution {
    fn from_outcome(scheme: Scheme, plans: Vec<UavPlan>, outcome: &SimOutcome) -> Self {
        Self {
            scheme,
            plans,
            schedule: outcome.schedule.clone(),
            completion: outcome.completion.clone(),
            t_max: outcome.t_max,
        }
    }
}

/// What one optimizer run went through.
#[derive(Debug, Clone, PartialEq)]
pub struct ItssoRun {
    pub solution: Solution,
    /// The final run of the returned solution.
    pub outcome: SimOutcome,
    /// Objective of the initial solution followed by that of each iteration.
    pub history: Vec<u32>,
    pub iterations: usize,
    pub placement_passes: usize,
}

/// Mean rate along straight full-speed legs through the given sensing locations.
fn mean_straight_rate(scenario: &Scenario, channel: &Channel, sensing: &[Vec<Position3>]) -> Result<f64> {
    let v = scenario.config.kinematics.v_max;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (uav, locs) in sensing.iter().enumerate() {
        let mut from = scenario.uav_starts[uav];
        for to in locs {
            for p in straight_waypoints(&from, to, v).iter().chain(std::iter::once(to)) {
                sum += channel.rate(p)?;
                n += 1;
            }
            from = *to;
        }
    }
    Ok(if n == 0 { 1.0 } else { sum / n as f64 })
}

fn slow_leg(start: Position3, end: Position3, slots: usize) -> Leg {
    let d = start.distance(&end);
    let waypoints = (1..=slots)
        .map(|k| if k == slots { end } else { start.step_toward(&end, d * k as f64 / slots as f64) })
        .collect::<Vec<_>>();
    Leg {
        start,
        end,
        residual_data: 0.0,
        route_slots: waypoints.len(),
        waypoints,
        turning_point: start,
        detour_slots: 0,
    }
}

/// Sensing location of every visit before any optimization.
pub fn initial_sensing(scenario: &Scenario, scheme: Scheme) -> Vec<Vec<Position3>> {
    let z = match scheme {
        Scheme::Fsl => scenario.config.fsl_height,
        _ => scenario.config.kinematics.h_min,
    };
    scenario
        .assignments
        .iter()
        .map(|list| {
            list.iter()
                .map(|&t| {
                    let l = scenario.tasks[t].location;
                    Position3::new(l.x, l.y, z)
                })
                .collect()
        })
        .collect()
}

fn check_probability(scenario: &Scenario, plans: &[UavPlan]) -> Result<()> {
    for task in &scenario.tasks {
        let positions: Vec<Position3> = task
            .workers
            .iter()
            .map(|&w| {
                let k = plans[w].tasks.iter().position(|&x| x == task.id).expect("worker visits task");
                plans[w].sensing[k]
            })
            .collect();
        let p = group_success(&task.location, &positions, &scenario.config.sensing);
        if p < scenario.config.sensing.threshold - 1e-12 {
            return domain(format!(
                "task {} reaches sensing probability {p:.6} below the threshold {}",
                task.id, scenario.config.sensing.threshold
            ));
        }
    }
    Ok(())
}

fn sim_options(scenario: &Scenario) -> SimOptions {
    SimOptions { model: scenario.config.model(), ..SimOptions::default() }
}

/// Slow straight legs through the overhead points, scheduled at random.
pub fn initial_solution(scenario: &Scenario, scheme: Scheme, config: &ItssoConfig) -> Result<(Solution, SimOutcome)> {
    config.validate()?;
    let channel = scenario.channel()?;
    let planner = Planner::new(channel, scenario.config.kinematics)?;
    let options = scenario.config.model();
    let sensing = initial_sensing(scenario, scheme);
    if scheme != Scheme::Fsl {
        let probe: Vec<UavPlan> = scenario
            .assignments
            .iter()
            .enumerate()
            .map(|(uav, list)| UavPlan {
                uav,
                start: scenario.uav_starts[uav],
                tasks: list.clone(),
                sensing: sensing[uav].clone(),
                legs: Vec::new(),
                tail: Vec::new(),
            })
            .collect();
        check_probability(scenario, &probe)?;
    }
    let r0 = mean_straight_rate(scenario, &channel, &sensing)?;
    let v0 = config.initial_speed_ratio * planner.kin.v_max;
    let slow = planner.with_speed(v0);
    let mut plans = Vec::with_capacity(scenario.uavs());
    for (uav, locs) in sensing.into_iter().enumerate() {
        let mut plan = UavPlan {
            uav,
            start: scenario.uav_starts[uav],
            tasks: scenario.assignments[uav].clone(),
            sensing: locs,
            legs: Vec::new(),
            tail: Vec::new(),
        };
        for k in 0..plan.tasks.len() {
            let start = plan.leg_start(k);
            let end = plan.sensing[k];
            let residual = leg_residual(scenario, &planner, &plan, k, options)?;
            let mut slots = (start.distance(&end) / v0).ceil() as usize;
            if residual > 0.0 {
                slots = slots.max((2.0 * residual / r0).ceil() as usize).max(1);
            }
            let mut leg = slow_leg(start, end, slots);
            while residual > 0.0 && leg_capacity(&channel, &leg)? < residual {
                if leg.slots() > 100_000 {
                    return domain(format!("uav {uav} leg {k} cannot upload its data at the initial speed"));
                }
                leg = slow_leg(start, end, leg.slots() + 1);
            }
            leg.residual_data = residual;
            plan.legs.push(leg);
        }
        let tail_residual = leg_residual(scenario, &planner, &plan, plan.tasks.len(), options)?;
        let last = *plan.sensing.last().unwrap_or(&plan.start);
        plan.tail = slow.ascend_until_drained(&last, tail_residual, &GrantMask::all_granted(), 100_000)?;
        plans.push(plan);
    }
    let mut scheduler = RandomScheduler::new(config.rng_seed);
    let outcome = run(scenario, &channel, &plans, &mut scheduler, &sim_options(scenario))?;
    Ok((Solution::from_outcome(scheme, plans, &outcome), outcome))
}

fn leg_capacity(channel: &Channel, leg: &Leg) -> Result<f64> {
    let mut s = 0.0;
    for p in &leg.waypoints {
        s += channel.rate(p)?;
    }
    Ok(s)
}

fn simulate_greedy(scenario: &Scenario, channel: &Channel, plans: &[UavPlan]) -> Result<SimOutcome> {
    run(scenario, channel, plans, &mut GreedyScheduler, &sim_options(scenario))
}

fn replan_all(
    scenario: &Scenario,
    planner: &Planner,
    plans: &[UavPlan],
    masks: &[UavMasks],
) -> Result<Vec<UavPlan>> {
    plans
        .iter()
        .zip(masks)
        .map(|(p, m)| build_plan(scenario, planner, p.uav, p.sensing.clone(), m, scenario.config.model()))
        .collect()
}

/// Runs the optimizer for `scheme` on `scenario`.
///
/// The non-cooperative scheme is expected to receive the transformed
/// scenario from [`Scenario::non_cooperative`]; see [`solve`].
pub fn run_itsso(scenario: &Scenario, scheme: Scheme, config: &ItssoConfig) -> Result<ItssoRun> {
    let channel = scenario.channel()?;
    let planner = Planner::new(channel, scenario.config.kinematics)?;
    let (mut best, mut outcome) = initial_solution(scenario, scheme, config)?;
    let mut history = vec![best.t_max];
    let mut iterations = 0;
    let mut placement_passes = 0;
    let placement = PlacementParams {
        check_probability: scheme != Scheme::Fsl,
        model: scenario.config.model(),
        ..PlacementParams::default()
    };

    while iterations < config.max_iterations {
        iterations += 1;
        let start_t = best.t_max;

        // Trajectories from the grants actually observed, or assuming every slot granted.
        let observed = observed_masks(&outcome, &best.plans);
        let fresh: Vec<UavMasks> = best.plans.iter().map(|p| UavMasks::all_granted(p.tasks.len())).collect();
        for masks in [&observed, &fresh] {
            let plans = replan_all(scenario, &planner, &best.plans, masks)?;
            let o = simulate_greedy(scenario, &channel, &plans)?;
            if o.t_max <= best.t_max {
                best = Solution::from_outcome(scheme, plans, &o);
                outcome = o;
            }
        }

        if scheme != Scheme::Fsl {
            let masks = observed_masks(&outcome, &best.plans);
            let mut plans = best.plans.clone();
            let PlacementReport { passes, .. } =
                optimize_sensing_locations(scenario, &planner, &mut plans, &masks, &placement)?;
            placement_passes += passes;
            let o = simulate_greedy(scenario, &channel, &plans)?;
            if o.t_max <= best.t_max {
                best = Solution::from_outcome(scheme, plans, &o);
                outcome = o;
            }
        }

        history.push(best.t_max);
        if best.t_max >= start_t {
            break;
        }
    }
    Ok(ItssoRun { solution: best, outcome, history, iterations, placement_passes })
}

/// The scenario a scheme actually optimizes.
pub fn scheme_scenario(scenario: &Scenario, scheme: Scheme) -> Scenario {
    match scheme {
        Scheme::Nc => scenario.non_cooperative(),
        _ => {
            let mut s = scenario.clone();
            s.config.scheme = scheme;
            s
        }
    }
}

/// Applies `scheme` to `scenario` and optimizes it.
pub fn solve(scenario: &Scenario, scheme: Scheme, config: &ItssoConfig) -> Result<(Scenario, ItssoRun)> {
    let s = scheme_scenario(scenario, scheme);
    let r = run_itsso(&s, scheme, config)?;
    Ok((s, r))
}
