//! Closed-form sensitivities of the completion time and the subcarrier
//! dominance threshold.

use crate::error::{Error, Result};
use crate::sensing::{required_sensing_radius, SensingParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityInputs {
    pub q: u32,
    pub threshold: f64,
    pub lambda: f64,
    pub tasks_per_uav: u32,
    pub v_max: f64,
}

impl Default for SensitivityInputs {
    fn default() -> Self {
        Self { q: 4, threshold: 0.9, lambda: 0.01, tasks_per_uav: 4, v_max: 50.0 }
    }
}

impl SensitivityInputs {
    pub fn validate(&self) -> Result<()> {
        if self.q < 1 {
            return Err(Error::InvalidParameter { name: "q", reason: "must be >= 1".into() });
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                reason: format!("must lie in (0, 1), got {}", self.threshold),
            });
        }
        if !(self.lambda > 0.0 && self.v_max > 0.0) {
            return Err(Error::InvalidParameter { name: "lambda", reason: "lambda and v_max must be > 0".into() });
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.tasks_per_uav as f64 / self.v_max
    }

    /// Sensing radius shared by the group, meters.
    pub fn radius(&self) -> f64 {
        required_sensing_radius(self.q, &SensingParams { lambda: self.lambda, threshold: self.threshold })
    }
}

/// Change of a UAV's completion time per additional worker.
pub fn dtmax_dq(inp: &SensitivityInputs) -> Result<f64> {
    inp.validate()?;
    let q = inp.q as f64;
    let a = (1.0 - inp.threshold).powf(1.0 / q);
    Ok(a * (1.0 - inp.threshold).ln() / (inp.lambda * (1.0 - a) * q * q) * inp.scale())
}

/// Change of a UAV's completion time per unit of sensing threshold.
pub fn dtmax_dprth(inp: &SensitivityInputs) -> Result<f64> {
    inp.validate()?;
    let q = inp.q as f64;
    let a = (1.0 - inp.threshold).powf(1.0 / q);
    Ok((1.0 - inp.threshold).powf(1.0 / q - 1.0) / (inp.lambda * q * (1.0 - a)) * inp.scale())
}

/// Flight-time saving model: `-(N_i / v_max) * d0(q, PR_th)` with a real-valued `q`.
pub fn flight_time_model(q: f64, threshold: f64, lambda: f64, tasks_per_uav: f64, v_max: f64) -> f64 {
    let d0 = -(1.0 - (1.0 - threshold).powf(1.0 / q)).ln() / lambda;
    -(tasks_per_uav / v_max) * d0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceModel {
    pub eta: f64,
    /// Mean straight-line leg bound, slots.
    pub mean_leg_lower_bound: f64,
    pub uavs: usize,
    pub subcarriers: usize,
}

/// Subcarrier count below which transmission dominates the completion time.
pub fn dominance_threshold(model: &DominanceModel) -> Result<f64> {
    if !(model.eta > 0.0 && model.mean_leg_lower_bound > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eta",
            reason: "eta and the mean leg bound must be > 0".into(),
        });
    }
    Ok(model.eta * model.uavs as f64 / model.mean_leg_lower_bound)
}

/// Waiting-time slope through the origin from `(M / K, mean transmission slots)` points.
pub fn fit_eta(points: &[(f64, f64)]) -> Result<f64> {
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter { name: "points", reason: "need a non-zero abscissa".into() });
    }
    Ok(sxy / sxx)
}
