//! 3GPP urban-macro air-to-ground link between a UAV and the base station.
//!
//! All `log` terms in the pathloss expressions are base 10; the carrier
//! frequency enters in GHz. Small-scale fading is not modeled, so every
//! quantity here is a deterministic function of the UAV position.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::Position3;

/// Radio parameters of the cell. Powers are in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Base station antenna height `H`, meters.
    pub bs_height: f64,
    /// Carrier frequency, GHz.
    pub carrier_freq_ghz: f64,
    /// Bandwidth of one subcarrier, Hz.
    pub subcarrier_bandwidth_hz: f64,
    pub noise_power_dbm: f64,
    pub tx_power_dbm: f64,
    /// Physical length of one slot, seconds.
    pub slot_duration_s: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            bs_height: 25.0,
            carrier_freq_ghz: 2.0,
            subcarrier_bandwidth_hz: 1.0e6,
            noise_power_dbm: -96.0,
            tx_power_dbm: 23.0,
            slot_duration_s: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bs_height", self.bs_height),
            ("carrier_freq_ghz", self.carrier_freq_ghz),
            ("subcarrier_bandwidth_hz", self.subcarrier_bandwidth_hz),
            ("slot_duration_s", self.slot_duration_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        for (name, v) in [
            ("noise_power_dbm", self.noise_power_dbm),
            ("tx_power_dbm", self.tx_power_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Per-position link evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub distance_to_bs: f64,
    pub horizontal_distance: f64,
    pub los_prob: f64,
    pub los_pathloss_db: f64,
    pub nlos_pathloss_db: f64,
    pub avg_pathloss_db: f64,
    /// Linear SNR.
    pub snr: f64,
    /// Bits delivered in one slot on one subcarrier.
    pub rate: f64,
}

/// Channel model with the dBm powers converted to milliwatts once.
#[derive(Debug, Clone, Copy)]
pub struct Channel {
    params: ChannelParams,
    tx_mw: f64,
    noise_mw: f64,
    /// `20 log10(f_c)` and `20 log10(40 pi f_c / 3)`.
    los_freq_term: f64,
    nlos_freq_term: f64,
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

impl Channel {
    pub fn new(params: ChannelParams) -> Result<Self> {
        params.validate()?;
        let fc = params.carrier_freq_ghz;
        Ok(Self {
            params,
            tx_mw: dbm_to_mw(params.tx_power_dbm),
            noise_mw: dbm_to_mw(params.noise_power_dbm),
            los_freq_term: 20.0 * fc.log10(),
            nlos_freq_term: 20.0 * (40.0 * std::f64::consts::PI * fc / 3.0).log10(),
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn bs_position(&self) -> Position3 {
        Position3::new(0.0, 0.0, self.params.bs_height)
    }

    fn check(uav: &Position3) -> Result<()> {
        if !uav.is_finite() {
            return domain(format!("non-finite UAV position {uav:?}"));
        }
        if uav.z <= 0.0 {
            return domain(format!("UAV altitude must be > 0, got {}", uav.z));
        }
        Ok(())
    }

    pub fn distance_to_bs(&self, uav: &Position3) -> f64 {
        uav.distance(&self.bs_position())
    }

    /// LoS probability, clamped to `[0, 1]`.
    pub fn los_probability(&self, uav: &Position3) -> Result<f64> {
        Self::check(uav)?;
        Ok(los_probability_unchecked(uav))
    }

    pub fn average_pathloss(&self, uav: &Position3) -> Result<f64> {
        Ok(self.link_budget(uav)?.avg_pathloss_db)
    }

    pub fn link_budget(&self, uav: &Position3) -> Result<LinkBudget> {
        Self::check(uav)?;
        let d = self.distance_to_bs(uav);
        if d <= 0.0 {
            return domain("UAV coincides with the base station");
        }
        let log_d = d.log10();
        let p_los = los_probability_unchecked(uav);
        let pl_los = 28.0 + 22.0 * log_d + self.los_freq_term;
        let pl_nlos = -17.5 + (46.0 - 7.0 * uav.z.log10()) * log_d + self.nlos_freq_term;
        let pl = p_los * pl_los + (1.0 - p_los) * pl_nlos;
        let rx_mw = self.tx_mw / 10f64.powf(pl / 10.0);
        let snr = rx_mw / self.noise_mw;
        let rate =
            self.params.subcarrier_bandwidth_hz * (1.0 + snr).log2() * self.params.slot_duration_s;
        Ok(LinkBudget {
            distance_to_bs: d,
            horizontal_distance: uav.horizontal_norm(),
            los_prob: p_los,
            los_pathloss_db: pl_los,
            nlos_pathloss_db: pl_nlos,
            avg_pathloss_db: pl,
            snr,
            rate,
        })
    }

    /// Bits delivered in one slot; zero when the UAV holds no subcarrier.
    pub fn link_rate(&self, uav: &Position3, scheduled: bool) -> Result<f64> {
        let budget = self.link_budget(uav)?;
        Ok(if scheduled { budget.rate } else { 0.0 })
    }

    /// Scheduled rate, for hot loops over positions already known to be valid.
    pub fn rate(&self, uav: &Position3) -> Result<f64> {
        self.link_rate(uav, true)
    }
}

fn los_probability_unchecked(uav: &Position3) -> f64 {
    let log_z = uav.z.log10();
    let d1 = (460.0 * log_z - 700.0).max(18.0);
    let dh = uav.horizontal_norm();
    if dh <= d1 {
        return 1.0;
    }
    let p0 = 4300.0 * log_z - 3800.0;
    let p = d1 / dh + ((-dh / p0) * (1.0 - d1 / dh)).exp();
    p.clamp(0.0, 1.0)
}

/// `d_1` breakpoint of the LoS model at altitude `z`.
pub fn los_breakpoint(z: f64) -> f64 {
    (460.0 * z.log10() - 700.0).max(18.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel() -> Channel {
        Channel::new(ChannelParams::default()).unwrap()
    }

    #[test]
    fn los_is_one_inside_breakpoint() {
        let ch = channel();
        assert_eq!(ch.los_probability(&Position3::new(10.0, 0.0, 100.0)).unwrap(), 1.0);
        for z in [10.0, 50.0, 300.0] {
            assert_eq!(ch.los_probability(&Position3::new(0.0, 0.0, z)).unwrap(), 1.0);
        }
    }

    #[test]
    fn los_at_500m_clamps_raw_formula() {
        // Raw value 220/500 + exp(-500/4800 * 0.56) = 1.3833354498734922 exceeds one.
        let ch = channel();
        let p = ch.los_probability(&Position3::new(500.0, 0.0, 100.0)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn los_far_field_golden() {
        // Oracle: z = 10 gives d1 = 18, p0 = 500.
        let ch = channel();
        let p = ch.los_probability(&Position3::new(700.0, 0.0, 10.0)).unwrap();
        let expected = 18.0 / 700.0 + ((-700.0f64 / 500.0) * (1.0 - 18.0 / 700.0)).exp();
        assert!((p - expected).abs() < 1e-15);
        assert!(p < 1.0);
    }

    #[test]
    fn pathloss_golden_at_10m_offset() {
        let ch = channel();
        let pl = ch.average_pathloss(&Position3::new(10.0, 0.0, 100.0)).unwrap();
        assert!((pl - 75.356130314410819).abs() < 1e-9, "{pl}");
    }

    #[test]
    fn rate_golden_table_point() {
        let ch = channel();
        let r = ch.link_rate(&Position3::new(100.0, 0.0, 50.0), true).unwrap();
        assert!((r - 13516975.997860484).abs() < 1e-3, "{r}");
        assert_eq!(ch.link_rate(&Position3::new(100.0, 0.0, 50.0), false).unwrap(), 0.0);
    }

    #[test]
    fn mirror_positions_share_rate() {
        let ch = channel();
        let a = ch.rate(&Position3::new(123.0, -45.0, 33.0)).unwrap();
        let b = ch.rate(&Position3::new(-123.0, 45.0, 33.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn domain_errors() {
        let ch = channel();
        assert!(ch.los_probability(&Position3::new(1.0, 1.0, 0.0)).is_err());
        assert!(ch.los_probability(&Position3::new(f64::NAN, 1.0, 5.0)).is_err());
        assert!(ch.average_pathloss(&Position3::new(0.0, 0.0, 25.0)).is_err());
    }

    #[test]
    fn los_continuous_at_breakpoint() {
        let ch = channel();
        let mut z = 10.0;
        for _ in 0..100 {
            z = 10.0 + (z * 7.31) % 290.0;
            let d1 = los_breakpoint(z);
            let eps = 1e-6;
            let a = ch.los_probability(&Position3::new(d1 - eps, 0.0, z)).unwrap();
            let b = ch.los_probability(&Position3::new(d1 + eps, 0.0, z)).unwrap();
            assert!((a - b).abs() < 1e-6, "z={z} a={a} b={b}");
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = ChannelParams::default();
        p.slot_duration_s = 0.0;
        assert!(Channel::new(p).is_err());
    }
}
