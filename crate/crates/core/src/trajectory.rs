//! Per-leg trajectory construction.
//!
//! A leg runs from one sensing location to the next. The UAV always flies
//! at `v_max`; when the straight segment does not leave enough scheduled
//! slots to upload the residual data, the leg is split into a detour along
//! the rate gradient (ending at the turning point) followed by a straight
//! route to the next sensing location.
//!
//! Waypoint `k` (1-based) is the UAV position at the end of the `k`-th slot
//! of the leg, and the rate of that slot is evaluated there.

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::geometry::Position3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinematicParams {
    /// Maximum distance covered in one slot, meters.
    pub v_max: f64,
    /// Minimum flight altitude, meters.
    pub h_min: f64,
}

impl Default for KinematicParams {
    fn default() -> Self {
        Self { v_max: 50.0, h_min: 10.0 }
    }
}

impl KinematicParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v_max", self.v_max), ("h_min", self.h_min)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Which slots of a leg are expected to hold a subcarrier.
///
/// Offsets are 1-based slot indices within the leg; offsets past the stored
/// prefix are assumed granted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrantMask {
    denied: Vec<bool>,
}

impl GrantMask {
    pub const ALL: GrantMask = GrantMask { denied: Vec::new() };

    pub fn all_granted() -> Self {
        Self::ALL
    }

    /// `denied[k]` marks offset `k + 1` as denied.
    pub fn from_denials(denied: Vec<bool>) -> Self {
        let mut denied = denied;
        while denied.last() == Some(&false) {
            denied.pop();
        }
        Self { denied }
    }

    pub fn granted(&self, offset: usize) -> bool {
        offset == 0 || !self.denied.get(offset - 1).copied().unwrap_or(false)
    }

    pub fn is_all_granted(&self) -> bool {
        self.denied.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub start: Position3,
    pub end: Position3,
    pub residual_data: f64,
    pub waypoints: Vec<Position3>,
    pub turning_point: Position3,
    pub detour_slots: usize,
    pub route_slots: usize,
}

impl Leg {
    pub fn slots(&self) -> usize {
        self.waypoints.len()
    }

    pub fn straight(start: Position3, end: Position3, speed: f64) -> Leg {
        let waypoints = straight_waypoints(&start, &end, speed);
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
}

/// Least number of slots needed to cover `start -> end` at `v_max`.
pub fn delta_lower_bound(start: &Position3, end: &Position3, kin: &KinematicParams) -> usize {
    slots_for(start.distance(end), kin.v_max)
}

fn slots_for(distance: f64, speed: f64) -> usize {
    if distance <= 0.0 {
        return 0;
    }
    let n = (distance / speed).ceil();
    // A distance that is an exact multiple of the speed up to rounding.
    if n > 1.0 && (distance - (n - 1.0) * speed) <= 1e-9 * speed {
        (n - 1.0) as usize
    } else {
        n as usize
    }
}

/// Positions after each slot of a constant-speed straight flight, ending exactly at `end`.
pub fn straight_waypoints(start: &Position3, end: &Position3, speed: f64) -> Vec<Position3> {
    let d = start.distance(end);
    let n = slots_for(d, speed);
    let mut out = Vec::with_capacity(n);
    for k in 1..n {
        out.push(start.step_toward(end, k as f64 * speed));
    }
    if n > 0 {
        out.push(*end);
    }
    out
}

/// Closest approach to the base station kept by the gradient walk, meters.
const BS_CLEARANCE: f64 = 1.0;

/// Leg planner bound to one channel and one kinematic envelope.
#[derive(Debug, Clone, Copy)]
pub struct Planner {
    pub channel: Channel,
    pub kin: KinematicParams,
    /// Detour search cap, in multiples of the straight-line slot count.
    pub max_detour_factor: usize,
    /// Central-difference step for the rate gradient, meters.
    pub gradient_step: f64,
}

/// Lazily extended gradient-ascent walk from a fixed start.
struct AscentPath<'a> {
    planner: &'a Planner,
    points: Vec<Position3>,
    /// Direction and admissible step length from `points[k]`.
    steps: Vec<Option<(Position3, f64)>>,
}

impl<'a> AscentPath<'a> {
    fn new(planner: &'a Planner, start: Position3) -> Self {
        Self { planner, points: vec![start], steps: Vec::new() }
    }

    fn step_from(&mut self, k: usize) -> Result<Option<(Position3, f64)>> {
        while self.steps.len() <= k {
            let at = self.steps.len();
            let pos = self.points[at];
            let step = self.planner.ascent_step(&pos)?;
            let next = match step {
                Some((dir, len)) => clamp_altitude(pos + dir * len, self.planner.kin.h_min),
                None => pos,
            };
            self.steps.push(step);
            self.points.push(next);
        }
        Ok(self.steps[k])
    }

    fn point(&mut self, k: usize) -> Result<Position3> {
        if k > 0 {
            self.step_from(k - 1)?;
        }
        Ok(self.points[k])
    }
}

fn clamp_altitude(p: Position3, h_min: f64) -> Position3 {
    Position3::new(p.x, p.y, p.z.max(h_min))
}

impl Planner {
    pub fn new(channel: Channel, kin: KinematicParams) -> Result<Self> {
        kin.validate()?;
        Ok(Self { channel, kin, max_detour_factor: 10, gradient_step: 0.1 })
    }

    pub fn with_speed(&self, v_max: f64) -> Self {
        let mut p = *self;
        p.kin.v_max = v_max;
        p
    }

    fn rate_at(&self, p: &Position3) -> Result<f64> {
        self.channel.rate(p)
    }

    /// Unnormalized central-difference gradient of the scheduled rate.
    pub fn raw_rate_gradient(&self, pos: &Position3, h: f64) -> Result<Position3> {
        let dx = Position3::new(h, 0.0, 0.0);
        let dy = Position3::new(0.0, h, 0.0);
        let dz = Position3::new(0.0, 0.0, h);
        let g = |d: Position3| -> Result<f64> {
            Ok((self.rate_at(&(*pos + d))? - self.rate_at(&(*pos - d))?) / (2.0 * h))
        };
        Ok(Position3::new(g(dx)?, g(dy)?, g(dz)?))
    }

    /// Unit ascent direction of the rate; `None` when the gradient vanishes.
    ///
    /// The vertical component is dropped when a full step would take the UAV
    /// below `h_min`.
    pub fn rate_gradient(&self, pos: &Position3) -> Result<Option<Position3>> {
        let raw = self.raw_rate_gradient(pos, self.gradient_step)?;
        let Some(mut dir) = raw.normalized() else {
            return Ok(None);
        };
        if pos.z + self.kin.v_max * dir.z < self.kin.h_min {
            dir = match Position3::new(raw.x, raw.y, 0.0).normalized() {
                Some(d) => d,
                None => return Ok(None),
            };
        }
        Ok(Some(dir))
    }

    /// Direction and length of one detour slot from `pos`, or `None` to hover.
    fn ascent_step(&self, pos: &Position3) -> Result<Option<(Position3, f64)>> {
        let bs = self.channel.bs_position();
        let room = (pos.distance(&bs) - BS_CLEARANCE).max(0.0);
        let len = self.kin.v_max.min(room);
        if len <= 0.0 {
            return Ok(None);
        }
        let dir = match self.rate_gradient(pos)? {
            Some(d) => d,
            None => match Position3::new(-pos.x, -pos.y, 0.0).normalized() {
                Some(d) => d,
                None => return Ok(None),
            },
        };
        Ok(Some((dir, len)))
    }

    fn rate_sum(&self, points: &[Position3], mask: &GrantMask, first_offset: usize) -> Result<f64> {
        let mut sum = 0.0;
        for (k, p) in points.iter().enumerate() {
            if mask.granted(first_offset + k) {
                sum += self.rate_at(p)?;
            }
        }
        Ok(sum)
    }

    fn detour_cap(&self, lb: usize) -> usize {
        self.max_detour_factor * lb.max(1)
    }

    /// Pure gradient walk until the residual is uploaded; the positions after each slot.
    pub fn ascend_until_drained(
        &self,
        start: &Position3,
        residual: f64,
        mask: &GrantMask,
        max_slots: usize,
    ) -> Result<Vec<Position3>> {
        let mut path = AscentPath::new(self, *start);
        let mut left = residual;
        let mut k = 0;
        while left > 0.0 {
            if k >= max_slots {
                return Err(Error::InfeasibleLeg {
                    uav: usize::MAX,
                    leg: usize::MAX,
                    reason: format!("residual {residual} not drained within {max_slots} ascent slots"),
                });
            }
            k += 1;
            let p = path.point(k)?;
            if mask.granted(k) {
                left -= self.rate_at(&p)?;
            }
        }
        Ok(path.points[1..=k].to_vec())
    }

    /// Slot count of a leg whose sensing location coincides with its turning point.
    pub fn min_detour_slots(&self, start: &Position3, residual: f64, mask: &GrantMask) -> Result<usize> {
        Ok(self.ascend_until_drained(start, residual, mask, 100 * self.detour_cap(1))?.len())
    }

    /// Shortest leg from `start` to `end` that uploads `residual` bits in the
    /// slots `mask` grants.
    ///
    /// Total slot counts are tried in increasing order from the straight-line
    /// bound. For each count the detour length grows one slot at a time; the
    /// last detour step is shortened to the longest step after which the
    /// straight route still reaches `end` in the remaining slots. The first
    /// feasible candidate is returned, so among legs of the minimal slot
    /// count the detour is the shortest.
    ///
    /// The search first stops at `max_detour_factor` times the straight-line
    /// bound. Past that it continues up to the slot count of a full gradient
    /// drain followed by the straight route, which is always feasible.
    pub fn optimize_leg(
        &self,
        start: &Position3,
        end: &Position3,
        residual: f64,
        mask: &GrantMask,
    ) -> Result<Leg> {
        let v = self.kin.v_max;
        let lb = delta_lower_bound(start, end, &self.kin);
        if residual <= 0.0 {
            let mut leg = Leg::straight(*start, *end, v);
            leg.residual_data = residual.max(0.0);
            return Ok(leg);
        }
        let mut path = AscentPath::new(self, *start);
        let mut route = Vec::new();
        let mut first = lb.max(1);
        let mut last = lb + self.detour_cap(lb);
        let mut extended = false;
        loop {
            for total in first..=last {
                if let Some(leg) = self.try_total(&mut path, &mut route, start, end, residual, mask, total)? {
                    return Ok(leg);
                }
            }
            if extended {
                break;
            }
            // A full drain by gradient ascent followed by the straight route always works.
            extended = true;
            let drain = self.ascend_until_drained(start, residual, mask, 100 * self.detour_cap(1))?;
            let tp = *drain.last().unwrap_or(start);
            let fallback = drain.len() + delta_lower_bound(&tp, end, &self.kin);
            if fallback <= last {
                break;
            }
            first = last + 1;
            last = fallback;
        }
        Err(Error::InfeasibleLeg {
            uav: usize::MAX,
            leg: usize::MAX,
            reason: format!(
                "no leg uploads {residual} bits within {last} slots (straight-line bound {lb})"
            ),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn try_total(
        &self,
        path: &mut AscentPath,
        route: &mut Vec<Position3>,
        start: &Position3,
        end: &Position3,
        residual: f64,
        mask: &GrantMask,
        total: usize,
    ) -> Result<Option<Leg>> {
        let v = self.kin.v_max;
        for detour in 0..=total {
            let route_slots = total - detour;
            let reach = route_slots as f64 * v;
            let tp = if detour == 0 {
                *start
            } else {
                let base = path.point(detour - 1)?;
                let step_len = match path.step_from(detour - 1)? {
                    Some(s) => s,
                    None => (Position3::new(1.0, 0.0, 0.0), 0.0),
                };
                match longest_step_within(&base, step_len.0, step_len.1, end, reach) {
                    Some(s) => clamp_altitude(base + step_len.0 * s, self.kin.h_min),
                    None => continue,
                }
            };
            if tp.distance(end) > reach * (1.0 + 1e-12) + 1e-9 {
                continue;
            }
            route.clear();
            for k in 1..route_slots {
                route.push(tp.step_toward(end, k as f64 * v));
            }
            if route_slots > 0 {
                route.push(*end);
            } else if tp.distance(end) > 1e-9 {
                continue;
            }
            let mut sum = 0.0;
            for k in 1..detour {
                if mask.granted(k) {
                    sum += self.rate_at(&path.point(k)?)?;
                }
            }
            if detour > 0 && mask.granted(detour) {
                sum += self.rate_at(&tp)?;
            }
            sum += self.rate_sum(&route, mask, detour + 1)?;
            if sum >= residual {
                let mut waypoints = Vec::with_capacity(total);
                for k in 1..detour {
                    waypoints.push(path.point(k)?);
                }
                if detour > 0 {
                    waypoints.push(tp);
                }
                waypoints.extend_from_slice(&route);
                return Ok(Some(Leg {
                    start: *start,
                    end: *end,
                    residual_data: residual,
                    waypoints,
                    turning_point: tp,
                    detour_slots: detour,
                    route_slots,
                }));
            }
        }
        Ok(None)
    }
}

/// Largest `s` in `[0, max_len]` with `|base + s*dir - target| <= reach`.
fn longest_step_within(
    base: &Position3,
    dir: Position3,
    max_len: f64,
    target: &Position3,
    reach: f64,
) -> Option<f64> {
    let rel = *base - *target;
    let b = dir.dot(&rel);
    let c = rel.dot(&rel) - reach * reach;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let lo = (-b - root).max(0.0);
    let hi = (-b + root).min(max_len);
    if lo <= hi {
        Some(hi)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;

    fn planner() -> Planner {
        Planner::new(Channel::new(ChannelParams::default()).unwrap(), KinematicParams::default())
            .unwrap()
    }

    #[test]
    fn lower_bound_examples() {
        let kin = KinematicParams::default();
        let a = Position3::new(10.0, 20.0, 30.0);
        assert_eq!(delta_lower_bound(&a, &a, &kin), 0);
        assert_eq!(delta_lower_bound(&a, &(a + Position3::new(125.0, 0.0, 0.0)), &kin), 3);
        assert_eq!(delta_lower_bound(&a, &(a + Position3::new(100.0, 0.0, 0.0)), &kin), 2);
        assert_eq!(delta_lower_bound(&a, &(a + Position3::new(60.0, 80.0, 0.0)), &kin), 2);
    }

    #[test]
    fn gradient_points_toward_bs_when_far() {
        let p = planner();
        let g = p.rate_gradient(&Position3::new(400.0, 0.0, 80.0)).unwrap().unwrap();
        assert!(g.x < 0.0);
    }

    #[test]
    fn gradient_z_clamped_at_floor() {
        let p = planner();
        // High above the BS height in LoS the rate ascent points down.
        let pos = Position3::new(60.0, 0.0, 10.0);
        let raw = p.raw_rate_gradient(&pos, 0.1).unwrap();
        let g = p.rate_gradient(&pos).unwrap().unwrap();
        if raw.z < 0.0 {
            assert_eq!(g.z, 0.0);
        }
        let high = Position3::new(30.0, 0.0, 10.5);
        let raw = p.raw_rate_gradient(&high, 0.1).unwrap();
        assert!(raw.z > 0.0 || p.rate_gradient(&high).unwrap().unwrap().z == 0.0);
    }

    #[test]
    fn zero_residual_is_straight() {
        let p = planner();
        let a = Position3::new(300.0, 300.0, 10.0);
        let b = Position3::new(100.0, 420.0, 40.0);
        let leg = p.optimize_leg(&a, &b, 0.0, &GrantMask::all_granted()).unwrap();
        assert_eq!(leg.detour_slots, 0);
        assert_eq!(leg.slots(), delta_lower_bound(&a, &b, &p.kin));
        assert_eq!(*leg.waypoints.last().unwrap(), b);
    }

    #[test]
    fn mask_denials_lengthen_leg() {
        let p = planner();
        let a = Position3::new(300.0, 300.0, 10.0);
        let b = Position3::new(100.0, 420.0, 40.0);
        let all = p.optimize_leg(&a, &b, 20e6, &GrantMask::all_granted()).unwrap();
        let denied = GrantMask::from_denials(vec![true; 3]);
        let masked = p.optimize_leg(&a, &b, 20e6, &denied).unwrap();
        assert!(masked.slots() >= all.slots());
    }

    #[test]
    fn longest_step_geometry() {
        let base = Position3::new(0.0, 0.0, 0.0);
        let dir = Position3::new(1.0, 0.0, 0.0);
        let target = Position3::new(100.0, 0.0, 0.0);
        assert!((longest_step_within(&base, dir, 50.0, &target, 80.0).unwrap() - 50.0).abs() < 1e-12);
        assert!(longest_step_within(&base, -dir, 50.0, &target, 80.0).is_none());
        let s = longest_step_within(&base, -dir, 50.0, &target, 120.0).unwrap();
        assert!((s - 20.0).abs() < 1e-9);
    }

    #[test]
    fn mask_trailing_grants_are_trimmed() {
        let m = GrantMask::from_denials(vec![false, true, false, false]);
        assert!(m.granted(1));
        assert!(!m.granted(2));
        assert!(m.granted(3));
        assert!(m.granted(99));
        assert!(GrantMask::from_denials(vec![false; 5]).is_all_granted());
    }
}
