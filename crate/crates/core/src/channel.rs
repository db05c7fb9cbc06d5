//! Log-distance path loss, uplink SINR and per-resource-block capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise density in dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Parameters of a single link class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    pub pl0_db: f64,
    pub exponent: f64,
    pub ref_distance: f64,
}

/// Channel section of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Path loss at the reference distance.
    pub pl0_db: f64,
    pub ref_distance_m: f64,
    /// Exponent for links received at the macro station.
    pub macro_exponent: f64,
    /// Exponent for links received at a small cell.
    pub small_exponent: f64,
    pub rb_bandwidth_hz: f64,
    pub subframe_s: f64,
    /// Spectral efficiency cap in bits/s/Hz.
    pub max_se: f64,
    /// Noise floor per resource block; thermal noise over `rb_bandwidth_hz` when absent.
    pub noise_dbm_per_rb: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            pl0_db: 30.0,
            ref_distance_m: 1.0,
            macro_exponent: 3.0,
            small_exponent: 3.5,
            rb_bandwidth_hz: 180e3,
            subframe_s: 1e-3,
            max_se: 6.0,
            noise_dbm_per_rb: None,
        }
    }
}

impl ChannelConfig {
    pub fn noise_floor_dbm(&self) -> f64 {
        self.noise_dbm_per_rb
            .unwrap_or_else(|| THERMAL_NOISE_DBM_PER_HZ + 10.0 * self.rb_bandwidth_hz.log10())
    }

    /// Budget for a link received at a station of the given class.
    pub fn budget(&self, tx_power_dbm: f64, macro_rx: bool) -> LinkBudget {
        LinkBudget {
            tx_power_dbm,
            noise_floor_dbm: self.noise_floor_dbm(),
            pl0_db: self.pl0_db,
            exponent: if macro_rx {
                self.macro_exponent
            } else {
                self.small_exponent
            },
            ref_distance: self.ref_distance_m,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let positive = [
            ("channel.ref_distance_m", self.ref_distance_m),
            ("channel.macro_exponent", self.macro_exponent),
            ("channel.small_exponent", self.small_exponent),
            ("channel.rb_bandwidth_hz", self.rb_bandwidth_hz),
            ("channel.subframe_s", self.subframe_s),
            ("channel.max_se", self.max_se),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::range(field, format!("must be positive and finite, got {v}")));
            }
        }
        if !self.pl0_db.is_finite() {
            return Err(Error::range("channel.pl0_db", "must be finite"));
        }
        if let Some(n) = self.noise_dbm_per_rb {
            if !n.is_finite() {
                return Err(Error::range("channel.noise_dbm_per_rb", "must be finite"));
            }
        }
        Ok(())
    }
}

pub fn path_loss_db(distance: f64, budget: &LinkBudget) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::NonPositiveDistance(distance));
    }
    let d = distance.max(budget.ref_distance);
    Ok(budget.pl0_db + 10.0 * budget.exponent * (d / budget.ref_distance).log10())
}

/// Path loss for geometry that may put a transmitter exactly on the receiver.
pub(crate) fn link_loss_db(distance: f64, budget: &LinkBudget) -> f64 {
    let d = distance.max(budget.ref_distance);
    budget.pl0_db + 10.0 * budget.exponent * (d / budget.ref_distance).log10()
}

#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn sinr_linear(target_rx_mw: f64, interferer_rx_mw: &[f64], noise_mw: f64) -> f64 {
    target_rx_mw / (interferer_rx_mw.iter().sum::<f64>() + noise_mw)
}

/// Bits one resource block carries in one subframe at the given SINR.
pub fn rb_bits(sinr: f64, rb_bandwidth_hz: f64, subframe_s: f64, max_se: f64) -> u64 {
    let se = (1.0 + sinr.max(0.0)).log2().min(max_se);
    // Products like 180e3 * 1e-3 land a hair below the integer in binary.
    (rb_bandwidth_hz * subframe_s * se + 1e-9).floor() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn budget(pl0: f64, exponent: f64) -> LinkBudget {
        LinkBudget {
            tx_power_dbm: 23.0,
            noise_floor_dbm: -121.0,
            pl0_db: pl0,
            exponent,
            ref_distance: 1.0,
        }
    }

    #[test]
    fn path_loss_reference_points() {
        let b = budget(30.0, 3.0);
        assert_eq!(path_loss_db(1.0, &b).unwrap(), 30.0);
        assert!((path_loss_db(10.0, &b).unwrap() - 60.0).abs() < 1e-12);
        assert_eq!(path_loss_db(0.5, &b).unwrap(), 30.0);
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let b = budget(30.0, 3.0);
        assert!(matches!(path_loss_db(0.0, &b), Err(Error::NonPositiveDistance(_))));
        assert!(path_loss_db(-3.0, &b).is_err());
    }

    #[test]
    fn sinr_examples() {
        assert_eq!(sinr_linear(1.0, &[], 0.001), 1000.0);
        assert!((sinr_linear(1.0, &[1.0], 1e-9) - 1.0).abs() < 1e-8);
        assert_eq!(sinr_linear(0.0, &[0.3], 0.1), 0.0);
    }

    #[test]
    fn rb_bits_examples() {
        assert_eq!(rb_bits(0.0, 180e3, 1e-3, 6.0), 0);
        assert_eq!(rb_bits(1.0, 180e3, 1e-3, 6.0), 180);
        assert_eq!(rb_bits(1e9, 180e3, 1e-3, 6.0), 1080);
    }

    #[test]
    fn default_noise_floor_is_thermal_over_one_rb() {
        let c = ChannelConfig::default();
        assert!((c.noise_floor_dbm() - (-174.0 + 10.0 * 180e3f64.log10())).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn path_loss_monotone(a in 1e-3f64..5e3, b in 1e-3f64..5e3, exp in 0.5f64..6.0) {
            let bud = budget(30.0, exp);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(path_loss_db(lo, &bud).unwrap() <= path_loss_db(hi, &bud).unwrap());
        }

        #[test]
        fn extra_interference_never_adds_bits(
            target in 1e-12f64..1.0,
            base in proptest::collection::vec(0.0f64..1e-3, 0..5),
            extra in 0.0f64..1e-3,
            noise in 1e-13f64..1e-9,
        ) {
            let s0 = sinr_linear(target, &base, noise);
            let mut more = base.clone();
            more.push(extra);
            let s1 = sinr_linear(target, &more, noise);
            prop_assert!(s1 <= s0);
            prop_assert!(sinr_linear(target, &base, noise * 2.0) <= s0);
            prop_assert!(rb_bits(s1, 180e3, 1e-3, 6.0) <= rb_bits(s0, 180e3, 1e-3, 6.0));
        }
    }
}
