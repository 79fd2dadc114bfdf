//! Per-slot subcarrier allocation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A transmission request seen by the base station in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub uav: usize,
    /// Current completion-time estimate of the requester, slots.
    pub estimate: u32,
    /// Bits the requester still has to upload.
    pub residual: f64,
}

/// Binary subcarrier allocation `psi[uav][slot]` under a per-slot cap.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub capacity: usize,
    /// `grants[t - 1]` lists the UAVs holding a subcarrier in slot `t`, ascending.
    pub grants: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, grants: Vec::new() }
    }

    pub fn psi(&self, uav: usize, slot: u32) -> bool {
        slot >= 1
            && self
                .grants
                .get(slot as usize - 1)
                .is_some_and(|g| g.binary_search(&uav).is_ok())
    }

    pub fn slots(&self) -> usize {
        self.grants.len()
    }

    /// Whether every slot respects the cap.
    pub fn within_capacity(&self) -> bool {
        self.grants.iter().all(|g| g.len() <= self.capacity)
    }

    pub(crate) fn push(&mut self, mut granted: Vec<usize>) {
        granted.sort_unstable();
        granted.dedup();
        self.grants.push(granted);
    }
}

pub trait Scheduler {
    /// UAVs granted a subcarrier in `slot`; at most `capacity` of them, all requesters.
    fn grant(&mut self, slot: u32, requests: &[Request], capacity: usize) -> Vec<usize>;
}

/// Granting rule of the greedy scheduler: everyone if the requests fit,
/// otherwise the `capacity` requesters with the latest estimated completion.
///
/// Ties on the estimate go to the larger residual, then the lower UAV id.
pub fn schedule_slot(requests: &[Request], capacity: usize) -> Vec<usize> {
    if requests.len() <= capacity {
        let mut all: Vec<usize> = requests.iter().map(|r| r.uav).collect();
        all.sort_unstable();
        return all;
    }
    let mut ranked: Vec<&Request> = requests.iter().collect();
    ranked.sort_by(|a, b| {
        b.estimate
            .cmp(&a.estimate)
            .then(b.residual.total_cmp(&a.residual))
            .then(a.uav.cmp(&b.uav))
    });
    let mut granted: Vec<usize> = ranked[..capacity].iter().map(|r| r.uav).collect();
    granted.sort_unstable();
    granted
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyScheduler;

impl Scheduler for GreedyScheduler {
    fn grant(&mut self, _slot: u32, requests: &[Request], capacity: usize) -> Vec<usize> {
        schedule_slot(requests, capacity)
    }
}

/// Grants `capacity` requesters drawn uniformly at random each slot.
#[derive(Debug, Clone)]
pub struct RandomScheduler {
    rng: ChaCha8Rng,
}

impl RandomScheduler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Scheduler for RandomScheduler {
    fn grant(&mut self, _slot: u32, requests: &[Request], capacity: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = requests.iter().map(|r| r.uav).collect();
        ids.shuffle(&mut self.rng);
        ids.truncate(capacity);
        ids.sort_unstable();
        ids
    }
}

/// Replays a recorded schedule, dropping grants to UAVs that are not requesting.
#[derive(Debug, Clone)]
pub struct ReplayScheduler {
    schedule: Schedule,
}

impl ReplayScheduler {
    pub fn new(schedule: Schedule) -> Self {
        Self { schedule }
    }
}

impl Scheduler for ReplayScheduler {
    fn grant(&mut self, slot: u32, requests: &[Request], capacity: usize) -> Vec<usize> {
        let mut out: Vec<usize> = requests
            .iter()
            .map(|r| r.uav)
            .filter(|&u| self.schedule.psi(u, slot))
            .collect();
        out.sort_unstable();
        out.truncate(capacity);
        out
    }
}

/// Something whose completion slot can be projected assuming it holds a
/// subcarrier in every future slot it requests one.
pub trait CompletionProjection {
    fn project_completion(&self) -> u32;
}

/// Optimistic completion estimates used to rank requesters in the next slot.
pub fn update_completion_estimates<P: CompletionProjection>(states: &[P]) -> Vec<u32> {
    states.iter().map(CompletionProjection::project_completion).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(uav: usize, estimate: u32) -> Request {
        Request { uav, estimate, residual: 1.0 }
    }

    #[test]
    fn empty_and_uncontended() {
        assert!(schedule_slot(&[], 10).is_empty());
        let r = [req(4, 3), req(1, 9), req(7, 2)];
        assert_eq!(schedule_slot(&r, 10), vec![1, 4, 7]);
    }

    #[test]
    fn contention_sort_oracle() {
        // Pseudo-random estimates; oracle: sort by estimate descending.
        let mut seed = 12345u64;
        for _ in 0..50 {
            let mut reqs = Vec::new();
            for u in 0..12 {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                reqs.push(Request { uav: u, estimate: (seed >> 33) as u32 % 40, residual: 1.0 });
            }
            let granted = schedule_slot(&reqs, 10);
            assert_eq!(granted.len(), 10);
            let mut order: Vec<_> = reqs.clone();
            order.sort_by(|a, b| b.estimate.cmp(&a.estimate).then(a.uav.cmp(&b.uav)));
            let mut expect: Vec<usize> = order[..10].iter().map(|r| r.uav).collect();
            expect.sort_unstable();
            assert_eq!(granted, expect);
            let min_granted = reqs.iter().filter(|r| granted.contains(&r.uav)).map(|r| r.estimate).min();
            let max_denied = reqs.iter().filter(|r| !granted.contains(&r.uav)).map(|r| r.estimate).max();
            assert!(min_granted >= max_denied);
        }
    }

    #[test]
    fn tie_break_residual_then_id() {
        let r = [
            Request { uav: 0, estimate: 5, residual: 1.0 },
            Request { uav: 1, estimate: 5, residual: 2.0 },
            Request { uav: 2, estimate: 5, residual: 1.0 },
        ];
        assert_eq!(schedule_slot(&r, 1), vec![1]);
        assert_eq!(schedule_slot(&r, 2), vec![0, 1]);
    }

    #[test]
    fn random_scheduler_deterministic_and_capped() {
        let r: Vec<Request> = (0..15).map(|u| req(u, 1)).collect();
        let a: Vec<_> = (0..5).map({
            let mut s = RandomScheduler::new(9);
            move |t| s.grant(t, &r.clone(), 10)
        }).collect();
        let r2: Vec<Request> = (0..15).map(|u| req(u, 1)).collect();
        let mut s = RandomScheduler::new(9);
        for (t, g) in a.iter().enumerate() {
            assert_eq!(&s.grant(t as u32, &r2, 10), g);
            assert_eq!(g.len(), 10);
        }
    }

    #[test]
    fn replay_drops_idle_grants() {
        let mut sched = Schedule::new(2);
        sched.push(vec![3, 1]);
        let mut replay = ReplayScheduler::new(sched);
        assert_eq!(replay.grant(1, &[req(1, 0), req(2, 0)], 2), vec![1]);
        assert!(replay.grant(2, &[req(1, 0)], 2).is_empty());
    }
}
