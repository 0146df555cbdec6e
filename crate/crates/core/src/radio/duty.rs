use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::PowerModeTable;

/// Inputs of the duty-cycled communication energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleParams {
    pub bits_per_packet: f64,
    pub baud: f64,
    pub i_com_ma: f64,
    /// Sampling/compute plus leakage current while the radio is off.
    pub i_cmp_lkg_ma: f64,
    /// Radio switching transient, counted twice per packet.
    pub t_tran_s: f64,
    pub supply_v: f64,
    pub horizon_s: f64,
    pub interval_s: f64,
}

impl DutyCycleParams {
    /// 22-byte packets at 625 baud (282 ms on air), radio current and
    /// standby current from the node's power table, one day horizon.
    pub fn from_modes(modes: &PowerModeTable, interval_s: f64) -> Self {
        Self {
            bits_per_packet: 176.0,
            baud: 625.0,
            i_com_ma: modes.comm_current_ma(),
            i_cmp_lkg_ma: modes.standby_current_ma(),
            t_tran_s: 0.0,
            supply_v: modes.supply_v,
            horizon_s: 86_400.0,
            interval_s,
        }
    }

    pub fn with_interval(self, interval_s: f64) -> Self {
        Self { interval_s, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bits_per_packet", self.bits_per_packet),
            ("baud", self.baud),
            ("supply_v", self.supply_v),
            ("horizon_s", self.horizon_s),
            ("interval_s", self.interval_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        for (name, v) in [
            ("i_com_ma", self.i_com_ma),
            ("i_cmp_lkg_ma", self.i_cmp_lkg_ma),
            ("t_tran_s", self.t_tran_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be non-negative"));
            }
        }
        if self.interval_s > self.horizon_s {
            return Err(Error::invalid("interval_s", "longer than the horizon"));
        }
        Ok(())
    }

    /// Radio on-time over the horizon.
    pub fn t_com_s(&self) -> f64 {
        self.bits_per_packet * self.horizon_s / (self.baud * self.interval_s)
    }
}

impl Default for DutyCycleParams {
    fn default() -> Self {
        Self::from_modes(&PowerModeTable::default(), 1.0)
    }
}

/// Energy (J) over the horizon; currents in mA.
pub fn duty_cycle_energy(p: &DutyCycleParams) -> f64 {
    let t_com = p.t_com_s();
    let t_off = p.horizon_s - t_com;
    let packets = p.horizon_s / p.interval_s;
    (t_com * p.i_com_ma + t_off * p.i_cmp_lkg_ma + 2.0 * p.t_tran_s * p.i_com_ma * packets)
        * p.supply_v
        / 1000.0
}

/// Fraction of samples not transmitted when sending one in `interval`.
pub fn info_loss(interval: f64) -> f64 {
    1.0 - 1.0 / interval
}

/// Energy of one period spent in communication, computation and standby;
/// times in s, currents in mA.
pub fn average_mode_energy(
    t_comm: f64,
    t_comp: f64,
    t_off: f64,
    i_comm: f64,
    i_comp: f64,
    i_off: f64,
    v: f64,
) -> f64 {
    v * (t_comm * i_comm + t_comp * i_comp + t_off * i_off) / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub interval_s: f64,
    pub energy_j: f64,
    /// Energy at the first listed interval over this row's energy.
    pub reduction: f64,
    pub info_loss: f64,
}

/// Energy and information loss per interval; the first interval is the
/// baseline for `reduction`.
pub fn tradeoff_table(base: &DutyCycleParams, intervals: &[f64]) -> Result<Vec<TradeoffRow>> {
    let Some(&first) = intervals.first() else {
        return Err(Error::invalid("intervals", "empty list"));
    };
    let baseline = base.with_interval(first);
    baseline.validate()?;
    let e0 = duty_cycle_energy(&baseline);
    intervals
        .iter()
        .map(|&n| {
            let p = base.with_interval(n);
            p.validate()?;
            let e = duty_cycle_energy(&p);
            Ok(TradeoffRow {
                interval_s: n,
                energy_j: e,
                reduction: e0 / e,
                info_loss: 1.0 - first / n,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_packet_reduces_to_airtime_energy() {
        let p = DutyCycleParams {
            bits_per_packet: 176.0,
            baud: 625.0,
            i_com_ma: 35.0,
            i_cmp_lkg_ma: 0.0,
            t_tran_s: 0.0,
            supply_v: 3.7,
            horizon_s: 600.0,
            interval_s: 600.0,
        };
        assert_relative_eq!(
            duty_cycle_energy(&p),
            176.0 / 625.0 * 35.0 * 3.7 / 1000.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn transient_term() {
        let base = DutyCycleParams {
            i_cmp_lkg_ma: 0.0,
            ..Default::default()
        }
        .with_interval(10.0);
        let with = DutyCycleParams {
            t_tran_s: 0.01,
            ..base
        };
        let extra = 2.0 * 0.01 * base.i_com_ma * 8640.0 * base.supply_v / 1000.0;
        assert_relative_eq!(
            duty_cycle_energy(&with) - duty_cycle_energy(&base),
            extra,
            max_relative = 1e-9
        );
    }

    #[test]
    fn default_constants_frozen() {
        // radio 35 mA, standby 0.28 mA, 3.7 V, one day
        let p = DutyCycleParams::default();
        assert_relative_eq!(p.i_com_ma, 35.0, max_relative = 1e-12);
        assert_relative_eq!(p.i_cmp_lkg_ma, 0.28, max_relative = 1e-12);
        let e1 = duty_cycle_energy(&p);
        let e100 = duty_cycle_energy(&p.with_interval(100.0));
        let t1 = 176.0 / 625.0 * 86400.0;
        assert_relative_eq!(
            e1,
            (t1 * 35.0 + (86400.0 - t1) * 0.28) * 3.7 / 1000.0,
            max_relative = 1e-12
        );
        let t100 = t1 / 100.0;
        assert_relative_eq!(
            e100,
            (t100 * 35.0 + (86400.0 - t100) * 0.28) * 3.7 / 1000.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn info_loss_closed_form() {
        assert_eq!(info_loss(1.0), 0.0);
        assert_relative_eq!(info_loss(100.0), 0.99, max_relative = 1e-15);
        let rows = tradeoff_table(&DutyCycleParams::default(), &[1.0, 10.0, 100.0]).unwrap();
        assert_eq!(rows[0].info_loss, 0.0);
        assert_eq!(rows[0].reduction, 1.0);
        assert_relative_eq!(rows[2].info_loss, 0.99, max_relative = 1e-15);
        assert!(rows.windows(2).all(|w| w[1].energy_j < w[0].energy_j));
        assert!(tradeoff_table(&DutyCycleParams::default(), &[]).is_err());
        assert!(tradeoff_table(&DutyCycleParams::default(), &[1.0, 1e6]).is_err());
    }

    #[test]
    fn mode_energy_examples() {
        assert_eq!(
            average_mode_energy(0.0, 0.0, 0.0, 35.0, 3.5, 0.28, 3.7),
            0.0
        );
        assert_relative_eq!(
            average_mode_energy(0.282, 0.0, 0.0, 35.0, 0.0, 0.0, 3.7),
            36.519e-3,
            max_relative = 1e-9
        );
        let cycle = average_mode_energy(0.0, 0.0008, 0.999, 0.0, 3.5, 0.28, 3.7)
            + 3.7 * 0.0002 * 1.9 / 1000.0;
        assert!((cycle / 1.04e-3 - 1.0).abs() < 0.01, "{cycle}");
    }
}
