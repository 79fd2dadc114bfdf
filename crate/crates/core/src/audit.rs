//! Independent feasibility check of a simulated trace.
//!
//! The auditor only looks at the scenario and the per-slot trace; it
//! recomputes rates, residuals and sensing probabilities itself.

use std::collections::BTreeMap;
use std::fmt;

use crate::channel::Channel;
use crate::error::Result;
use crate::geometry::Position3;
use crate::scenario::Scenario;
use crate::sensing::group_success;
use crate::simulator::{SlotType, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditOptions {
    pub check_probability: bool,
    pub transmit_in_sensing_slot: bool,
}

impl AuditOptions {
    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self {
            check_probability: scenario.config.scheme != crate::scenario::Scheme::Fsl,
            transmit_in_sensing_slot: scenario.config.transmit_in_sensing_slot,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub slot: u32,
    pub uav: Option<usize>,
    pub what: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.uav {
            Some(u) => write!(f, "slot {} uav {}: {}", self.slot, u, self.what),
            None => write!(f, "slot {}: {}", self.slot, self.what),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
    /// Completion slot of each UAV as read from the trace.
    pub completion: Vec<u32>,
    pub t_max: u32,
}

impl AuditReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

const POS_TOL: f64 = 1e-6;

pub fn audit_trace(scenario: &Scenario, trace: &[TraceRecord], opts: &AuditOptions) -> Result<AuditReport> {
    let channel = Channel::new(scenario.config.channel)?;
    let kin = scenario.config.kinematics;
    let m = scenario.uavs();
    let mut report = AuditReport { completion: vec![0; m], ..Default::default() };
    let mut bad = |slot: u32, uav: Option<usize>, what: String| report.violations.push(Violation { slot, uav, what });

    let mut per_uav: Vec<Vec<&TraceRecord>> = vec![Vec::new(); m];
    let mut grants_per_slot: BTreeMap<u32, usize> = BTreeMap::new();
    for r in trace {
        if r.uav >= m {
            bad(r.slot, Some(r.uav), "unknown uav".into());
            continue;
        }
        per_uav[r.uav].push(r);
        if r.granted {
            *grants_per_slot.entry(r.slot).or_default() += 1;
        }
    }
    for (&slot, &g) in &grants_per_slot {
        if g > scenario.capacity {
            bad(slot, None, format!("{g} grants exceed the {} subcarriers", scenario.capacity));
        }
    }

    let mut sensing_at: Vec<Vec<Position3>> = vec![Vec::new(); m];
    let mut completion = vec![0u32; m];
    for (uav, recs) in per_uav.iter().enumerate() {
        let tasks = &scenario.assignments[uav];
        let mut prev_pos = scenario.uav_starts[uav];
        let mut prev_type: Option<SlotType> = None;
        let mut residual = 0.0f64;
        let mut sensed = 0usize;
        let mut done_at = None;
        for (n, r) in recs.iter().enumerate() {
            let expect_slot = n as u32 + 1;
            if r.slot != expect_slot {
                bad(r.slot, Some(uav), format!("expected slot {expect_slot}"));
            }
            if done_at.is_some() {
                bad(r.slot, Some(uav), "record after all tasks were completed".into());
            }
            let p = r.position;
            if p.z < kin.h_min - POS_TOL {
                bad(r.slot, Some(uav), format!("altitude {} below {}", p.z, kin.h_min));
            }
            let moved = prev_pos.distance(&p);
            if moved > kin.v_max + POS_TOL {
                bad(r.slot, Some(uav), format!("moved {moved} m in one slot"));
            }
            if let Some(pt) = prev_type {
                if !SlotType::may_follow(pt, r.slot_type) {
                    bad(r.slot, Some(uav), format!("{} after {}", r.slot_type.as_str(), pt.as_str()));
                }
            }
            let may_request = match r.slot_type {
                SlotType::Transmission => true,
                SlotType::Sensing => opts.transmit_in_sensing_slot,
                SlotType::Empty => false,
            };
            if r.granted && !may_request {
                bad(r.slot, Some(uav), format!("granted in a {} slot", r.slot_type.as_str()));
            }
            let rate = channel.rate(&p)?;
            let expected_bits = if r.granted { rate } else { 0.0 };
            if (r.rate_bits - expected_bits).abs() > 1e-6 * rate.max(1.0) {
                bad(r.slot, Some(uav), format!("rate {} differs from link rate {expected_bits}", r.rate_bits));
            }
            match r.slot_type {
                SlotType::Sensing => {
                    if moved > POS_TOL {
                        bad(r.slot, Some(uav), format!("moved {moved} m while sensing"));
                    }
                    if residual > 0.0 {
                        bad(r.slot, Some(uav), format!("sensed with {residual} bits undelivered"));
                    }
                    if sensed >= tasks.len() {
                        bad(r.slot, Some(uav), "more sensing slots than tasks".into());
                    } else {
                        residual = scenario.tasks[tasks[sensed]].data_size;
                        sensing_at[uav].push(p);
                    }
                    sensed += 1;
                    if r.granted {
                        residual = (residual - r.rate_bits).max(0.0);
                    }
                }
                SlotType::Transmission => {
                    if residual <= 0.0 {
                        bad(r.slot, Some(uav), "transmission slot without pending data".into());
                    }
                    residual = (residual - r.rate_bits).max(0.0);
                }
                SlotType::Empty => {
                    if residual > 0.0 {
                        bad(r.slot, Some(uav), format!("empty slot with {residual} bits pending"));
                    }
                }
            }
            if (r.residual_bits - residual).abs() > 1e-6 * scenario.config.data_size {
                bad(r.slot, Some(uav), format!("residual {} but {} recomputed", r.residual_bits, residual));
            }
            if sensed == tasks.len() && residual <= 0.0 && done_at.is_none() {
                done_at = Some(r.slot);
            }
            prev_pos = p;
            prev_type = Some(r.slot_type);
        }
        if sensed != tasks.len() {
            bad(0, Some(uav), format!("sensed {sensed} of {} tasks", tasks.len()));
        }
        match done_at {
            Some(t) => completion[uav] = t,
            None if tasks.is_empty() => {}
            None => bad(0, Some(uav), "data of the last task never delivered".into()),
        }
    }

    if opts.check_probability {
        for task in &scenario.tasks {
            let mut positions = Vec::with_capacity(task.workers.len());
            for &w in &task.workers {
                if let Some(k) = scenario.task_index(w, task.id) {
                    if let Some(p) = sensing_at[w].get(k) {
                        positions.push(*p);
                    }
                }
            }
            if positions.len() != task.workers.len() {
                continue;
            }
            let p = group_success(&task.location, &positions, &scenario.config.sensing);
            if p < scenario.config.sensing.threshold - 1e-9 {
                bad(0, None, format!("task {} sensed with probability {p:.6}", task.id));
            }
        }
    }
    report.t_max = completion.iter().copied().max().unwrap_or(0);
    report.completion = completion;
    Ok(report)
}
