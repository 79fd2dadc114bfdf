//! Sensing-location local search.
//!
//! Each pass visits the tasks in id order and tries to shorten the leg of the
//! worker that currently finishes last, by pulling its sensing location one
//! slot of flight toward the leg's turning point. If the group then misses the
//! sensing threshold, other workers with slack are pushed toward the point
//! above the task until the threshold holds again. Moves that do not strictly
//! shorten the bottleneck worker are undone.

use crate::error::{domain, Result};
use crate::geometry::Position3;
use crate::plan::{replan_around, ModelOptions, UavMasks, UavPlan};
use crate::scenario::Scenario;
use crate::sensing::group_success;
use crate::trajectory::{GrantMask, KinematicParams, Planner};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementParams {
    pub max_passes: usize,
    /// Enforce the group sensing threshold on every accepted move.
    pub check_probability: bool,
    pub model: ModelOptions,
}

impl Default for PlacementParams {
    fn default() -> Self {
        Self { max_passes: 200, check_probability: true, model: ModelOptions::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlacementReport {
    pub passes: usize,
    pub accepted_moves: usize,
    /// Planned maximum completion time after each pass.
    pub pass_t_max: Vec<usize>,
}

/// Slot-count bounds of leg `k` of `plan`.
///
/// The lower bound is the leg flown as a pure gradient detour that ends where
/// the data is drained; the upper bound is the leg ending straight above the
/// task at minimum altitude.
pub fn delta_bounds(
    scenario: &Scenario,
    planner: &Planner,
    plan: &UavPlan,
    k: usize,
    mask: &GrantMask,
    options: ModelOptions,
) -> Result<(usize, usize)> {
    let residual = crate::plan::leg_residual(scenario, planner, plan, k, options)?;
    let start = plan.leg_start(k);
    let lb = planner.min_detour_slots(&start, residual, mask)?;
    let top = scenario.tasks[plan.tasks[k]].overhead(planner.kin.h_min);
    let ub = planner.optimize_leg(&start, &top, residual, mask)?.slots();
    Ok((lb, ub))
}

/// Moves `current` by `dt * v_max` along the ray from `turning_point` through
/// `current`. Negative `dt` moves back toward the turning point.
pub fn adjust_collinear(
    current: &Position3,
    turning_point: &Position3,
    dt: i32,
    kin: &KinematicParams,
) -> Result<Position3> {
    if dt == 0 {
        return Ok(*current);
    }
    let Some(dir) = (*current - *turning_point).normalized() else {
        return domain("sensing location coincides with the turning point");
    };
    let p = *current + dir * (dt as f64 * kin.v_max);
    Ok(Position3::new(p.x, p.y, p.z.max(kin.h_min)))
}

fn pull(from: &Position3, to: &Position3, step: f64, h_min: f64) -> Position3 {
    let p = from.step_toward(to, step);
    Position3::new(p.x, p.y, p.z.max(h_min))
}

fn probability_ok(scenario: &Scenario, plans: &[UavPlan], task: usize) -> bool {
    let t = &scenario.tasks[task];
    let positions: Vec<Position3> = t
        .workers
        .iter()
        .filter_map(|&w| {
            let k = plans[w].tasks.iter().position(|&x| x == task)?;
            Some(plans[w].sensing[k])
        })
        .collect();
    group_success(&t.location, &positions, &scenario.config.sensing) >= scenario.config.sensing.threshold - 1e-12
}

fn index_of(plan: &UavPlan, task: usize) -> usize {
    plan.tasks.iter().position(|&t| t == task).expect("worker visits its task")
}

/// Runs the local search in place and reports what it did.
pub fn optimize_sensing_locations(
    scenario: &Scenario,
    planner: &Planner,
    plans: &mut [UavPlan],
    masks: &[UavMasks],
    params: &PlacementParams,
) -> Result<PlacementReport> {
    let v = planner.kin.v_max;
    let h_min = planner.kin.h_min;
    let options = params.model;
    let mut t: Vec<usize> = plans.iter().map(UavPlan::planned_completion).collect();
    let mut report = PlacementReport::default();

    for _ in 0..params.max_passes {
        report.passes += 1;
        let mut improved = false;
        for (j, task) in scenario.tasks.iter().enumerate() {
            let Some(&i) = task.workers.iter().max_by(|a, b| t[**a].cmp(&t[**b]).then(b.cmp(a))) else {
                continue;
            };
            let k = index_of(&plans[i], j);
            let lb = planner.min_detour_slots(
                &plans[i].leg_start(k),
                crate::plan::leg_residual(scenario, planner, &plans[i], k, options)?,
                masks[i].leg(k),
            )?;
            let leg = &plans[i].legs[k];
            if leg.slots() <= lb {
                continue;
            }
            let current = plans[i].sensing[k];
            let tp = leg.turning_point;
            if current.distance(&tp) < 1e-9 {
                continue;
            }
            let old_ti = t[i];
            let old_max = t.iter().copied().max().unwrap_or(0);
            let mut saved: Vec<(usize, UavPlan, usize)> = vec![(i, plans[i].clone(), t[i])];

            plans[i].sensing[k] = pull(&current, &tp, v, h_min);
            let mut ok = replan_around(scenario, planner, &mut plans[i], k, &masks[i], options).is_ok();
            if ok {
                t[i] = plans[i].planned_completion();
                ok = t[i] <= old_ti;
            }
            if ok && params.check_probability && !probability_ok(scenario, plans, j) {
                let top = task.overhead(h_min);
                let mut pool: Vec<usize> = task
                    .workers
                    .iter()
                    .copied()
                    .filter(|&m| {
                        m != i
                            && t[m] + 1 <= old_ti
                            && plans[m].sensing[index_of(&plans[m], j)].distance(&top) > 1e-9
                    })
                    .collect();
                pool.sort_by_key(|&m| (t[m], m));
                let mut satisfied = false;
                while !satisfied && !pool.is_empty() {
                    let mut next = Vec::with_capacity(pool.len());
                    for &m in &pool {
                        let km = index_of(&plans[m], j);
                        if !saved.iter().any(|s| s.0 == m) {
                            saved.push((m, plans[m].clone(), t[m]));
                        }
                        let before = (plans[m].clone(), t[m]);
                        plans[m].sensing[km] = pull(&plans[m].sensing[km], &top, v, h_min);
                        let stepped = replan_around(scenario, planner, &mut plans[m], km, &masks[m], options)
                            .is_ok()
                            && plans[m].planned_completion() < old_ti;
                        if !stepped {
                            plans[m] = before.0;
                            t[m] = before.1;
                            continue;
                        }
                        t[m] = plans[m].planned_completion();
                        if plans[m].sensing[km].distance(&top) > 1e-9 {
                            next.push(m);
                        }
                        if probability_ok(scenario, plans, j) {
                            satisfied = true;
                            break;
                        }
                    }
                    pool = next;
                }
                ok = satisfied;
            }
            if ok {
                ok = saved.iter().all(|s| t[s.0] <= old_max);
            }
            if ok {
                improved = true;
                report.accepted_moves += 1;
            } else {
                for (m, plan, tm) in saved {
                    plans[m] = plan;
                    t[m] = tm;
                }
            }
        }
        report.pass_t_max.push(t.iter().copied().max().unwrap_or(0));
        if !improved {
            break;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjust_examples() {
        let kin = KinematicParams::default();
        let tp = Position3::new(0.0, 0.0, 20.0);
        let cur = Position3::new(10.0, 0.0, 20.0);
        assert_eq!(adjust_collinear(&cur, &tp, 0, &kin).unwrap(), cur);
        assert_eq!(adjust_collinear(&cur, &tp, 1, &kin).unwrap(), Position3::new(60.0, 0.0, 20.0));
        assert!(adjust_collinear(&tp, &tp, 1, &kin).is_err());
    }

    #[test]
    fn adjust_stays_collinear() {
        let kin = KinematicParams::default();
        let tp = Position3::new(30.0, 40.0, 60.0);
        let cur = Position3::new(90.0, 10.0, 45.0);
        for dt in [-1, 1, 2, 3] {
            let p = adjust_collinear(&cur, &tp, dt, &kin).unwrap();
            let residual = (p - tp).cross(&(cur - tp)).norm() / (cur - tp).norm();
            assert!(residual < 1e-6, "{dt}: {residual}");
        }
    }

    #[test]
    fn floor_clamp() {
        let kin = KinematicParams::default();
        let tp = Position3::new(0.0, 0.0, 100.0);
        let cur = Position3::new(0.0, 0.0, 20.0);
        assert_eq!(adjust_collinear(&cur, &tp, 2, &kin).unwrap().z, 10.0);
    }
}
