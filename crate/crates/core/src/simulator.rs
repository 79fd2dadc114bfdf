//! Slot-by-slot execution of the sense-and-send protocol.
//!
//! Each UAV is in one of three slot types per slot. In a sensing slot it
//! hovers at its sensing location and collects the task's data; in a
//! transmission slot it follows its planned waypoints while requesting a
//! subcarrier; in an empty slot it only flies. A UAV that reaches its next
//! sensing location with data left hovers there transmitting until drained.

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::geometry::Position3;
use crate::plan::{ModelOptions, UavPlan};
use crate::scenario::Scenario;
use crate::scheduler::{update_completion_estimates, CompletionProjection, Request, Schedule, Scheduler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotType {
    Sensing,
    Transmission,
    Empty,
}

impl SlotType {
    pub fn as_str(&self) -> &'static str {
        match self {
            SlotType::Sensing => "sensing",
            SlotType::Transmission => "transmission",
            SlotType::Empty => "empty",
        }
    }

    pub fn parse(s: &str) -> Option<SlotType> {
        match s {
            "sensing" => Some(SlotType::Sensing),
            "transmission" => Some(SlotType::Transmission),
            "empty" => Some(SlotType::Empty),
            _ => None,
        }
    }

    /// Transitions allowed between consecutive slots of one UAV.
    pub fn may_follow(prev: SlotType, next: SlotType) -> bool {
        use SlotType::*;
        !matches!((prev, next), (Sensing, Sensing))
            && !matches!((prev, next), (Empty, Transmission))
    }
}

/// One UAV in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub slot: u32,
    pub uav: usize,
    pub slot_type: SlotType,
    /// Position at the end of the slot.
    pub position: Position3,
    pub granted: bool,
    /// Bits delivered in the slot (the full link rate when granted).
    pub rate_bits: f64,
    /// Bits left after the slot.
    pub residual_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalingParams {
    /// Messages per UAV beacon.
    pub beacon_msgs: u32,
    /// Messages per BS response.
    pub response_msgs: u32,
}

impl Default for SignalingParams {
    fn default() -> Self {
        Self { beacon_msgs: 1, response_msgs: 1 }
    }
}

/// Upper bound on control-channel messages per slot.
pub fn signaling_cost(uavs: usize, sig: &SignalingParams) -> u64 {
    uavs as u64 * (sig.beacon_msgs as u64 + sig.response_msgs as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub model: ModelOptions,
    pub signaling: SignalingParams,
    /// Hard stop; a UAV unfinished after this many slots is reported as starved.
    pub max_slots: u32,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { model: ModelOptions::default(), signaling: SignalingParams::default(), max_slots: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub completion: Vec<u32>,
    pub t_max: u32,
    pub trace: Vec<TraceRecord>,
    pub schedule: Schedule,
    /// Sensing slot of each task, per UAV, in plan order.
    pub sensing_slots: Vec<Vec<u32>>,
    /// Control messages actually exchanged over the run.
    pub signaling_messages: u64,
}

impl SimOutcome {
    /// Slots from each sensing slot until that task's data was drained, per UAV.
    pub fn transmission_durations(&self) -> Vec<Vec<u32>> {
        let m = self.completion.len();
        let mut out = vec![Vec::new(); m];
        let mut since: Vec<Option<u32>> = vec![None; m];
        for r in &self.trace {
            if r.slot_type == SlotType::Sensing {
                since[r.uav] = Some(r.slot);
                if r.residual_bits <= 0.0 {
                    out[r.uav].push(0);
                    since[r.uav] = None;
                }
            } else if let Some(s) = since[r.uav] {
                if r.residual_bits <= 0.0 {
                    out[r.uav].push(r.slot - s);
                    since[r.uav] = None;
                }
            }
        }
        out
    }

    /// Per-UAV list of `(requested, granted)` flags over its slots.
    pub fn records_of(&self, uav: usize) -> impl Iterator<Item = &TraceRecord> {
        self.trace.iter().filter(move |r| r.uav == uav)
    }
}

/// Plan with link rates precomputed at every position the UAV can occupy.
struct PlanCache<'a> {
    plan: &'a UavPlan,
    data: Vec<f64>,
    leg_rates: Vec<Vec<f64>>,
    sensing_rates: Vec<f64>,
    tail_rates: Vec<f64>,
}

impl<'a> PlanCache<'a> {
    fn new(plan: &'a UavPlan, scenario: &Scenario, channel: &Channel) -> Result<Self> {
        let rate = |p: &Position3| channel.rate(p);
        Ok(Self {
            plan,
            data: plan.tasks.iter().map(|&t| scenario.tasks[t].data_size).collect(),
            leg_rates: plan
                .legs
                .iter()
                .map(|l| l.waypoints.iter().map(rate).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?,
            sensing_rates: plan.sensing.iter().map(rate).collect::<Result<_>>()?,
            tail_rates: plan.tail.iter().map(rate).collect::<Result<_>>()?,
        })
    }

    fn tail_hover(&self) -> (Position3, f64) {
        match (self.plan.tail.last(), self.tail_rates.last()) {
            (Some(p), Some(r)) => (*p, *r),
            _ => {
                let k = self.plan.sensing.len() - 1;
                (self.plan.sensing[k], self.sensing_rates[k])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Leg { k: usize, wp: usize },
    Tail { wp: usize },
    Done,
}

#[derive(Debug, Clone, Copy)]
struct Cursor {
    phase: Phase,
    residual: f64,
    pos: Position3,
}

struct StepInfo {
    slot_type: SlotType,
    rate: f64,
    sensed: bool,
    finished: bool,
}

impl Cursor {
    fn start(cache: &PlanCache) -> Cursor {
        Cursor {
            phase: if cache.plan.tasks.is_empty() { Phase::Done } else { Phase::Leg { k: 0, wp: 0 } },
            residual: 0.0,
            pos: cache.plan.start,
        }
    }

    fn slot_type(&self, cache: &PlanCache) -> Option<SlotType> {
        match self.phase {
            Phase::Done => None,
            Phase::Leg { k, wp } => {
                let arrived = wp == cache.plan.legs[k].waypoints.len();
                Some(if arrived && self.residual <= 0.0 {
                    SlotType::Sensing
                } else if self.residual > 0.0 {
                    SlotType::Transmission
                } else {
                    SlotType::Empty
                })
            }
            Phase::Tail { .. } => Some(SlotType::Transmission),
        }
    }

    fn requests(&self, cache: &PlanCache, model: ModelOptions) -> bool {
        match self.slot_type(cache) {
            Some(SlotType::Transmission) => true,
            Some(SlotType::Sensing) => model.transmit_in_sensing_slot,
            _ => false,
        }
    }

    fn step(&mut self, cache: &PlanCache, granted: bool, model: ModelOptions) -> Option<StepInfo> {
        let slot_type = self.slot_type(cache)?;
        let n = cache.plan.tasks.len();
        let mut info = StepInfo { slot_type, rate: 0.0, sensed: false, finished: false };
        match (self.phase, slot_type) {
            (Phase::Leg { k, .. }, SlotType::Sensing) => {
                info.sensed = true;
                self.residual = cache.data[k];
                if model.transmit_in_sensing_slot && granted {
                    info.rate = cache.sensing_rates[k];
                    self.residual = (self.residual - info.rate).max(0.0);
                }
                self.phase = if k + 1 < n { Phase::Leg { k: k + 1, wp: 0 } } else { Phase::Tail { wp: 0 } };
                if k + 1 == n && self.residual <= 0.0 {
                    self.phase = Phase::Done;
                    info.finished = true;
                }
            }
            (Phase::Leg { k, wp }, _) => {
                let leg = &cache.plan.legs[k].waypoints;
                let r = if wp < leg.len() {
                    self.pos = leg[wp];
                    self.phase = Phase::Leg { k, wp: wp + 1 };
                    cache.leg_rates[k][wp]
                } else {
                    self.pos = cache.plan.sensing[k];
                    cache.sensing_rates[k]
                };
                if slot_type == SlotType::Transmission && granted {
                    info.rate = r;
                    self.residual = (self.residual - r).max(0.0);
                }
            }
            (Phase::Tail { wp }, _) => {
                let r = if wp < cache.plan.tail.len() {
                    self.pos = cache.plan.tail[wp];
                    self.phase = Phase::Tail { wp: wp + 1 };
                    cache.tail_rates[wp]
                } else {
                    let (p, r) = cache.tail_hover();
                    self.pos = p;
                    r
                };
                if granted {
                    info.rate = r;
                    self.residual = (self.residual - r).max(0.0);
                }
                if self.residual <= 0.0 {
                    self.phase = Phase::Done;
                    info.finished = true;
                }
            }
            (Phase::Done, _) => return None,
        }
        Some(info)
    }

    fn task_index(&self, cache: &PlanCache) -> usize {
        match self.phase {
            Phase::Leg { k, .. } => k,
            _ => cache.plan.tasks.len(),
        }
    }
}

/// Cursor snapshot that can project its own completion slot.
struct Projector<'c, 'a> {
    cache: &'c PlanCache<'a>,
    cursor: Cursor,
    now: u32,
    model: ModelOptions,
    cap: u32,
}

impl CompletionProjection for Projector<'_, '_> {
    fn project_completion(&self) -> u32 {
        let mut c = self.cursor;
        let mut t = self.now;
        let mut last = t.saturating_sub(1);
        while t < self.cap {
            match c.step(self.cache, true, self.model) {
                Some(info) => {
                    last = t;
                    if info.finished {
                        return t;
                    }
                }
                None => return last,
            }
            t += 1;
        }
        self.cap
    }
}

/// Runs the protocol for all plans under `scheduler`.
pub fn run(
    scenario: &Scenario,
    channel: &Channel,
    plans: &[UavPlan],
    scheduler: &mut dyn Scheduler,
    options: &SimOptions,
) -> Result<SimOutcome> {
    let m = plans.len();
    let caches: Vec<PlanCache> =
        plans.iter().map(|p| PlanCache::new(p, scenario, channel)).collect::<Result<_>>()?;
    let mut cursors: Vec<Cursor> = caches.iter().map(Cursor::start).collect();
    let mut completion = vec![0u32; m];
    let mut sensing_slots = vec![Vec::new(); m];
    let mut trace = Vec::new();
    let mut schedule = Schedule::new(scenario.capacity);
    let per_uav = signaling_cost(1, &options.signaling);
    let mut signaling_messages = 0u64;
    let model = options.model;

    let mut t = 0u32;
    while cursors.iter().any(|c| c.phase != Phase::Done) {
        t += 1;
        if t > options.max_slots {
            let uav = cursors.iter().position(|c| c.phase != Phase::Done).unwrap_or(0);
            return Err(Error::Starvation {
                uav: plans[uav].uav,
                task: cursors[uav].task_index(&caches[uav]),
                slots: options.max_slots,
            });
        }
        let requesters: Vec<usize> =
            (0..m).filter(|&i| cursors[i].requests(&caches[i], model)).collect();
        let projectors: Vec<Projector> = requesters
            .iter()
            .map(|&i| Projector {
                cache: &caches[i],
                cursor: cursors[i],
                now: t,
                model,
                cap: options.max_slots,
            })
            .collect();
        let estimates = update_completion_estimates(&projectors);
        let requests: Vec<Request> = requesters
            .iter()
            .zip(&estimates)
            .map(|(&i, &estimate)| Request { uav: i, estimate, residual: cursors[i].residual })
            .collect();
        let granted = scheduler.grant(t, &requests, scenario.capacity);
        debug_assert!(granted.len() <= scenario.capacity);
        let mut is_granted = vec![false; m];
        for &g in &granted {
            if requesters.binary_search(&g).is_ok() {
                is_granted[g] = true;
            }
        }
        schedule.push((0..m).filter(|&i| is_granted[i]).collect());

        for i in 0..m {
            let Some(info) = cursors[i].step(&caches[i], is_granted[i], model) else { continue };
            signaling_messages += per_uav;
            if info.sensed {
                sensing_slots[i].push(t);
            }
            if info.finished {
                completion[i] = t;
            }
            trace.push(TraceRecord {
                slot: t,
                uav: i,
                slot_type: info.slot_type,
                position: cursors[i].pos,
                granted: is_granted[i],
                rate_bits: info.rate,
                residual_bits: cursors[i].residual,
            });
        }
    }
    let t_max = completion.iter().copied().max().unwrap_or(0);
    Ok(SimOutcome { completion, t_max, trace, schedule, sensing_slots, signaling_messages })
}

/// Planning masks observed in a run: a slot is denied when the UAV
/// requested and did not get a subcarrier. Offsets restart after every
/// sensing slot.
pub fn observed_masks(outcome: &SimOutcome, plans: &[UavPlan]) -> Vec<crate::plan::UavMasks> {
    use crate::trajectory::GrantMask;
    let mut out = Vec::with_capacity(plans.len());
    for (i, plan) in plans.iter().enumerate() {
        let n = plan.tasks.len();
        let mut segments: Vec<Vec<bool>> = vec![Vec::new(); n + 1];
        let mut seg = 0usize;
        for r in outcome.records_of(i) {
            if r.slot_type == SlotType::Sensing {
                seg += 1;
                continue;
            }
            let denied = r.slot_type == SlotType::Transmission && !r.granted;
            segments[seg.min(n)].push(denied);
        }
        let mut legs: Vec<GrantMask> = Vec::with_capacity(n);
        for s in segments.iter().take(n) {
            legs.push(GrantMask::from_denials(s.clone()));
        }
        out.push(crate::plan::UavMasks { legs, tail: GrantMask::from_denials(segments[n].clone()) });
    }
    out
}
