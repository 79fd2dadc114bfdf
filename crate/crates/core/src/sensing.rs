//! Exponential sensing model for single UAVs and cooperative worker groups.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::Position3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensingParams {
    /// Sensing performance parameter, 1/m.
    pub lambda: f64,
    /// Required group success probability.
    pub threshold: f64,
}

impl Default for SensingParams {
    fn default() -> Self {
        Self { lambda: 0.01, threshold: 0.9 }
    }
}

impl SensingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be > 0, got {}", self.lambda),
            });
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                reason: format!("must lie in (0, 1), got {}", self.threshold),
            });
        }
        Ok(())
    }
}

/// A ground sensing task and the fixed group of UAVs that senses it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub location: Position3,
    /// Bits collected in the single sensing slot.
    pub data_size: f64,
    pub workers: Vec<usize>,
}

impl Task {
    /// Lowest admissible sensing point straight above the task.
    pub fn overhead(&self, h_min: f64) -> Position3 {
        Position3::new(self.location.x, self.location.y, h_min)
    }
}

pub fn sensing_success_single(distance: f64, params: &SensingParams) -> Result<f64> {
    if !(distance >= 0.0) {
        return domain(format!("sensing distance must be >= 0, got {distance}"));
    }
    Ok((-params.lambda * distance).exp())
}

pub fn sensing_success_coop(distances: &[f64], params: &SensingParams) -> Result<f64> {
    if distances.is_empty() {
        return domain("cooperative sensing needs at least one UAV");
    }
    let mut miss = 1.0;
    for &d in distances {
        miss *= 1.0 - sensing_success_single(d, params)?;
    }
    Ok(1.0 - miss)
}

/// Group success probability of UAVs at `positions` sensing `task`.
pub fn group_success(task: &Position3, positions: &[Position3], params: &SensingParams) -> f64 {
    let mut miss = 1.0;
    for p in positions {
        miss *= 1.0 - (-params.lambda * p.distance(task)).exp();
    }
    1.0 - miss
}

/// Common distance at which `q` UAVs exactly meet the threshold.
pub fn required_sensing_radius(q: u32, params: &SensingParams) -> f64 {
    let q = q.max(1) as f64;
    -(1.0 - (1.0 - params.threshold).powf(1.0 / q)).ln() / params.lambda
}

/// Smallest group size meeting the threshold when every member senses from `d0`.
pub fn min_cooperative_uavs(d0: f64, params: &SensingParams) -> u32 {
    let single = (-params.lambda * d0.max(0.0)).exp();
    if single >= 1.0 {
        return 1;
    }
    let ratio = (1.0 - params.threshold).ln() / (1.0 - single).ln();
    // A ratio a hair above an integer is that integer up to rounding.
    let q = if ratio - ratio.floor() < 1e-9 * ratio.max(1.0) { ratio.floor() } else { ratio.ceil() };
    q.max(1.0) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: SensingParams = SensingParams { lambda: 0.01, threshold: 0.9 };

    #[test]
    fn single_values() {
        assert_eq!(sensing_success_single(0.0, &P).unwrap(), 1.0);
        assert!((sensing_success_single(100.0, &P).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((sensing_success_single(230.2585, &P).unwrap() - 0.1).abs() < 1e-6);
        assert!(sensing_success_single(-1.0, &P).is_err());
    }

    #[test]
    fn coop_values() {
        assert_eq!(sensing_success_coop(&[50.0, 0.0, 80.0], &P).unwrap(), 1.0);
        let p = sensing_success_coop(&[100.0; 4], &P).unwrap();
        assert!((p - 0.84033869984881471).abs() < 1e-12);
        assert_eq!(
            sensing_success_coop(&[37.0], &P).unwrap(),
            sensing_success_single(37.0, &P).unwrap()
        );
        assert!(sensing_success_coop(&[], &P).is_err());
    }

    #[test]
    fn radius_values() {
        assert!((required_sensing_radius(1, &P) - 10.536051565782628).abs() < 1e-9);
        let r4 = required_sensing_radius(4, &P);
        assert!((r4 - 82.631595365967328).abs() < 1e-9);
        let back = sensing_success_coop(&[r4; 4], &P).unwrap();
        assert!((back - 0.9).abs() < 1e-9);
    }

    #[test]
    fn min_q_matches_low_altitude_geometry() {
        // Members sensing from directly above at 10 m.
        for k in 1..=6 {
            let p = SensingParams { lambda: 0.01, threshold: 1.0 - 10f64.powi(-k) };
            assert_eq!(min_cooperative_uavs(10.0, &p), k as u32);
        }
        assert_eq!(min_cooperative_uavs(0.0, &P), 1);
    }

    #[test]
    fn min_q_inverts_radius() {
        for q in 1..=10 {
            assert_eq!(min_cooperative_uavs(required_sensing_radius(q, &P), &P), q);
        }
    }

    #[test]
    fn radius_monotone_on_grid() {
        for q in 1..10 {
            for k in 1..9 {
                let a = SensingParams { lambda: 0.01, threshold: 0.1 * k as f64 };
                let b = SensingParams { lambda: 0.01, threshold: 0.1 * (k + 1) as f64 - 0.05 };
                assert!(required_sensing_radius(q + 1, &a) > required_sensing_radius(q, &a));
                assert!(required_sensing_radius(q, &b) < required_sensing_radius(q, &a));
            }
        }
    }

    proptest! {
        #[test]
        fn coop_monotone(ds in proptest::collection::vec(0.0f64..500.0, 1..8), extra in 0.0f64..500.0, bump in 0.0f64..100.0, idx in 0usize..8) {
            let base = sensing_success_coop(&ds, &P).unwrap();
            let mut more = ds.clone();
            more.push(extra);
            prop_assert!(sensing_success_coop(&more, &P).unwrap() >= base - 1e-15);
            let mut farther = ds.clone();
            let i = idx % farther.len();
            farther[i] += bump;
            prop_assert!(sensing_success_coop(&farther, &P).unwrap() <= base + 1e-15);
        }
    }
}
