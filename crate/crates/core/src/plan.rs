//! Per-UAV flight plans and their construction from sensing locations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position3;
use crate::scenario::Scenario;
use crate::trajectory::{GrantMask, Leg, Planner};

/// Protocol variants shared by planning and simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Count uplink in the sensing slot itself toward that task's data.
    pub transmit_in_sensing_slot: bool,
}

/// Ordered task list of one UAV with its sensing locations and legs.
///
/// `legs[k]` ends at `sensing[k]`; `legs[0]` starts at the initial position.
/// `tail` holds the positions flown after the last sensing slot while the
/// last task's data is uploaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavPlan {
    pub uav: usize,
    pub start: Position3,
    pub tasks: Vec<usize>,
    pub sensing: Vec<Position3>,
    pub legs: Vec<Leg>,
    pub tail: Vec<Position3>,
}

impl UavPlan {
    /// Completion slot if every planned transmission slot delivers as planned.
    pub fn planned_completion(&self) -> usize {
        self.legs.iter().map(Leg::slots).sum::<usize>() + self.tasks.len() + self.tail.len()
    }

    pub fn leg_start(&self, k: usize) -> Position3 {
        if k == 0 {
            self.start
        } else {
            self.sensing[k - 1]
        }
    }

    /// Slot at which the `k`-th sensing happens under the plan.
    pub fn planned_sensing_slot(&self, k: usize) -> usize {
        self.legs[..=k].iter().map(Leg::slots).sum::<usize>() + k + 1
    }
}

/// Planning masks for every leg and the tail of one UAV.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UavMasks {
    pub legs: Vec<GrantMask>,
    pub tail: GrantMask,
}

impl UavMasks {
    pub fn all_granted(tasks: usize) -> Self {
        Self { legs: vec![GrantMask::all_granted(); tasks], tail: GrantMask::all_granted() }
    }

    pub fn leg(&self, k: usize) -> &GrantMask {
        static ALL: GrantMask = GrantMask::ALL;
        self.legs.get(k).unwrap_or(&ALL)
    }
}

/// Bits still to upload when leg `k` starts.
pub fn leg_residual(
    scenario: &Scenario,
    planner: &Planner,
    plan: &UavPlan,
    k: usize,
    options: ModelOptions,
) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let data = scenario.tasks[plan.tasks[k - 1]].data_size;
    if options.transmit_in_sensing_slot {
        let r = planner.channel.rate(&plan.sensing[k - 1])?;
        Ok((data - r).max(0.0))
    } else {
        Ok(data)
    }
}

fn tail_residual(
    scenario: &Scenario,
    planner: &Planner,
    plan: &UavPlan,
    options: ModelOptions,
) -> Result<f64> {
    leg_residual(scenario, planner, plan, plan.tasks.len(), options)
}

fn tag(e: Error, uav: usize, leg: usize) -> Error {
    match e {
        Error::InfeasibleLeg { reason, .. } => Error::InfeasibleLeg { uav, leg, reason },
        other => other,
    }
}

/// Re-plans leg `k` of `plan` between its current endpoints.
pub fn replan_leg(
    scenario: &Scenario,
    planner: &Planner,
    plan: &mut UavPlan,
    k: usize,
    mask: &GrantMask,
    options: ModelOptions,
) -> Result<()> {
    let residual = leg_residual(scenario, planner, plan, k, options)?;
    let start = plan.leg_start(k);
    let leg = planner
        .optimize_leg(&start, &plan.sensing[k], residual, mask)
        .map_err(|e| tag(e, plan.uav, k))?;
    plan.legs[k] = leg;
    Ok(())
}

pub fn replan_tail(
    scenario: &Scenario,
    planner: &Planner,
    plan: &mut UavPlan,
    mask: &GrantMask,
    options: ModelOptions,
) -> Result<()> {
    let residual = tail_residual(scenario, planner, plan, options)?;
    let last = *plan.sensing.last().unwrap_or(&plan.start);
    plan.tail = planner
        .ascend_until_drained(&last, residual, mask, 1000)
        .map_err(|e| tag(e, plan.uav, plan.tasks.len()))?;
    Ok(())
}

/// Re-plans every leg touching sensing location `k`: the incoming leg and
/// the outgoing leg (or the tail).
pub fn replan_around(
    scenario: &Scenario,
    planner: &Planner,
    plan: &mut UavPlan,
    k: usize,
    masks: &UavMasks,
    options: ModelOptions,
) -> Result<()> {
    replan_leg(scenario, planner, plan, k, masks.leg(k), options)?;
    if k + 1 < plan.tasks.len() {
        replan_leg(scenario, planner, plan, k + 1, masks.leg(k + 1), options)
    } else {
        replan_tail(scenario, planner, plan, &masks.tail, options)
    }
}

/// Builds a full plan through the given sensing locations at `v_max`.
pub fn build_plan(
    scenario: &Scenario,
    planner: &Planner,
    uav: usize,
    sensing: Vec<Position3>,
    masks: &UavMasks,
    options: ModelOptions,
) -> Result<UavPlan> {
    let tasks = scenario.assignments[uav].clone();
    assert_eq!(tasks.len(), sensing.len());
    let start = scenario.uav_starts[uav];
    let mut plan = UavPlan {
        uav,
        start,
        legs: Vec::with_capacity(tasks.len()),
        tasks,
        sensing,
        tail: Vec::new(),
    };
    for k in 0..plan.tasks.len() {
        plan.legs.push(Leg::straight(plan.leg_start(k), plan.sensing[k], planner.kin.v_max));
        replan_leg(scenario, planner, &mut plan, k, masks.leg(k), options)?;
    }
    replan_tail(scenario, planner, &mut plan, &masks.tail, options)?;
    Ok(plan)
}
