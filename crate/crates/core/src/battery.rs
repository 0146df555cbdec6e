//! Battery energy bookkeeping through a voltage/state-of-charge lookup table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{field, read_csv_rows, Error, Result};

pub const CURVE_HEADER: [&str; 2] = ["voltage_v", "soc_fraction"];

/// Minimum number of anchor points in a voltage/SoC table.
pub const MIN_CURVE_POINTS: usize = 11;

/// Generic single-cell Li-ion open-circuit curve, 3.0 V empty to 4.2 V full,
/// with the usual plateau around 3.7 V.
pub const LI_ION_CURVE: [(f64, f64); 11] = [
    (3.00, 0.00),
    (3.45, 0.05),
    (3.60, 0.10),
    (3.68, 0.20),
    (3.72, 0.30),
    (3.75, 0.40),
    (3.78, 0.50),
    (3.83, 0.60),
    (3.90, 0.70),
    (4.00, 0.80),
    (4.20, 1.00),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryModel {
    pub capacity_mah: f64,
    pub nominal_voltage: f64,
    /// (volts, state-of-charge fraction), strictly increasing in both.
    pub soc_curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub stored_energy_j: f64,
    pub voltage: f64,
}

/// Result of integrating net power over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeStep {
    pub state: BatteryState,
    /// Energy that could not be absorbed (> 0, battery full) or could not be
    /// supplied (< 0, battery empty).
    pub clipped_j: f64,
}

impl BatteryModel {
    pub fn new(
        capacity_mah: f64,
        nominal_voltage: f64,
        soc_curve: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let model = Self {
            capacity_mah,
            nominal_voltage,
            soc_curve,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_mah > 0.0 && self.capacity_mah.is_finite()) {
            return Err(Error::invalid("capacity_mah", "must be positive"));
        }
        if !(self.nominal_voltage > 0.0 && self.nominal_voltage.is_finite()) {
            return Err(Error::invalid("nominal_voltage", "must be positive"));
        }
        let curve = &self.soc_curve;
        if curve.len() < MIN_CURVE_POINTS {
            return Err(Error::invalid(
                "soc_curve",
                format!(
                    "needs at least {MIN_CURVE_POINTS} points, got {}",
                    curve.len()
                ),
            ));
        }
        if curve
            .windows(2)
            .any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1))
        {
            return Err(Error::invalid(
                "soc_curve",
                "voltage and state of charge must both strictly increase",
            ));
        }
        if curve[0].1 != 0.0 || curve[curve.len() - 1].1 != 1.0 {
            return Err(Error::invalid(
                "soc_curve",
                "must span 0 to 1 state of charge",
            ));
        }
        Ok(())
    }

    /// Li-ion cell with the default curve.
    pub fn li_ion(capacity_mah: f64) -> Result<Self> {
        Self::new(capacity_mah, 3.7, LI_ION_CURVE.to_vec())
    }

    pub fn capacity_energy_j(&self) -> f64 {
        self.capacity_mah / 1000.0 * self.nominal_voltage * 3600.0
    }

    pub fn v_empty(&self) -> f64 {
        self.soc_curve[0].0
    }

    pub fn v_full(&self) -> f64 {
        self.soc_curve[self.soc_curve.len() - 1].0
    }

    pub fn energy_from_voltage(&self, v: f64) -> Result<f64> {
        let (lo, hi) = (self.v_empty(), self.v_full());
        if !(lo..=hi).contains(&v) {
            return Err(Error::OutOfRange {
                quantity: "battery voltage",
                value: v,
                min: lo,
                max: hi,
            });
        }
        let soc = interpolate(&self.soc_curve, v, |p| p.0, |p| p.1);
        Ok(soc * self.capacity_energy_j())
    }

    pub fn voltage_from_energy(&self, e: f64) -> Result<f64> {
        let cap = self.capacity_energy_j();
        if !(0.0..=cap).contains(&e) {
            return Err(Error::OutOfRange {
                quantity: "stored energy",
                value: e,
                min: 0.0,
                max: cap,
            });
        }
        Ok(interpolate(&self.soc_curve, e / cap, |p| p.1, |p| p.0))
    }

    pub fn state_from_energy(&self, e: f64) -> Result<BatteryState> {
        Ok(BatteryState {
            stored_energy_j: e,
            voltage: self.voltage_from_energy(e)?,
        })
    }

    pub fn state_from_soc(&self, soc: f64) -> Result<BatteryState> {
        if !(0.0..=1.0).contains(&soc) {
            return Err(Error::OutOfRange {
                quantity: "state of charge",
                value: soc,
                min: 0.0,
                max: 1.0,
            });
        }
        self.state_from_energy(soc * self.capacity_energy_j())
    }

    pub fn is_full(&self, state: &BatteryState) -> bool {
        state.stored_energy_j >= self.capacity_energy_j() * (1.0 - 1e-9)
    }

    /// Integrates `net_power_mw` for `dt_s` seconds, clamping to [0, capacity].
    pub fn charge(&self, state: &BatteryState, net_power_mw: f64, dt_s: f64) -> Result<ChargeStep> {
        if !(dt_s > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let cap = self.capacity_energy_j();
        let target = state.stored_energy_j + net_power_mw * dt_s / 1000.0;
        let stored = target.clamp(0.0, cap);
        Ok(ChargeStep {
            state: self.state_from_energy(stored)?,
            clipped_j: target - stored,
        })
    }

    pub fn apply_net_power(
        &self,
        state: &BatteryState,
        net_power_mw: f64,
        dt_s: f64,
    ) -> Result<BatteryState> {
        Ok(self.charge(state, net_power_mw, dt_s)?.state)
    }

    pub fn load_curve_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
        read_csv_rows(path, &CURVE_HEADER, |_, rec| {
            let v: f64 = field(rec, 0, "voltage_v")?;
            let soc: f64 = field(rec, 1, "soc_fraction")?;
            if !(0.0..=1.0).contains(&soc) {
                return Err(format!("soc_fraction {soc} outside [0, 1]"));
            }
            Ok((v, soc))
        })
    }
}

/// Piecewise-linear lookup on a table sorted by `key`.
fn interpolate<P>(table: &[P], x: f64, key: impl Fn(&P) -> f64, val: impl Fn(&P) -> f64) -> f64 {
    let idx = table.partition_point(|p| key(p) <= x);
    if idx == 0 {
        return val(&table[0]);
    }
    if idx == table.len() {
        return val(&table[table.len() - 1]);
    }
    let (a, b) = (&table[idx - 1], &table[idx]);
    let t = (x - key(a)) / (key(b) - key(a));
    val(a) + t * (val(b) - val(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model() -> BatteryModel {
        BatteryModel::li_ion(230.0).unwrap()
    }

    #[test]
    fn voltage_to_energy_examples() {
        let m = model();
        assert_eq!(m.energy_from_voltage(3.0).unwrap(), 0.0);
        assert_relative_eq!(
            m.energy_from_voltage(4.2).unwrap(),
            3063.6,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            m.energy_from_voltage(3.78).unwrap(),
            1531.8,
            max_relative = 1e-12
        );
        assert!(matches!(
            m.energy_from_voltage(2.9),
            Err(Error::OutOfRange { .. })
        ));
        assert!(m.energy_from_voltage(4.21).is_err());
        assert!(m.voltage_from_energy(-1.0).is_err());
        assert!(m.voltage_from_energy(3064.0).is_err());
    }

    #[test]
    fn net_power_examples() {
        let m = model();
        let empty = m.state_from_energy(0.0).unwrap();
        let s = m.apply_net_power(&empty, 0.0, 60.0).unwrap();
        assert_eq!(s, empty);

        let s = m.apply_net_power(&empty, 100.0, 3600.0).unwrap();
        assert_relative_eq!(s.stored_energy_j, 360.0, max_relative = 1e-12);

        let start = m.state_from_energy(2000.0).unwrap();
        let night = m.apply_net_power(&start, -7.40, 717.0 * 60.0).unwrap();
        assert_relative_eq!(
            start.stored_energy_j - night.stored_energy_j,
            318.348,
            max_relative = 1e-9
        );
        assert!((start.stored_energy_j - night.stored_energy_j - 318.35).abs() < 0.01);
    }

    #[test]
    fn clamps_and_reports_clipping() {
        let m = model();
        let cap = m.capacity_energy_j();
        let full = m.state_from_soc(1.0).unwrap();
        let step = m.charge(&full, 50.0, 60.0).unwrap();
        assert_eq!(step.state.stored_energy_j, cap);
        assert_relative_eq!(step.clipped_j, 3.0, max_relative = 1e-9);
        assert!(m.is_full(&step.state));

        let low = m.state_from_energy(1.0).unwrap();
        let step = m.charge(&low, -100.0, 60.0).unwrap();
        assert_eq!(step.state.stored_energy_j, 0.0);
        assert_relative_eq!(step.clipped_j, -5.0, max_relative = 1e-9);
        assert!(m.charge(&low, 1.0, 0.0).is_err());
    }

    #[test]
    fn curve_validation() {
        assert!(BatteryModel::new(230.0, 3.7, LI_ION_CURVE[..5].to_vec()).is_err());
        let mut flat = LI_ION_CURVE.to_vec();
        flat[4].1 = flat[3].1;
        assert!(BatteryModel::new(230.0, 3.7, flat).is_err());
        let mut short = LI_ION_CURVE.to_vec();
        short[10].1 = 0.95;
        assert!(BatteryModel::new(230.0, 3.7, short).is_err());
        assert!(BatteryModel::new(0.0, 3.7, LI_ION_CURVE.to_vec()).is_err());
    }

    #[test]
    fn curve_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let mut text = String::from("voltage_v,soc_fraction\n");
        for (v, s) in LI_ION_CURVE {
            text.push_str(&format!("{v},{s}\n"));
        }
        std::fs::write(&path, text).unwrap();
        let curve = BatteryModel::load_curve_csv(&path).unwrap();
        assert_eq!(curve, LI_ION_CURVE.to_vec());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn energy_voltage_roundtrip(frac in 0.0f64..=1.0) {
            let m = model();
            let e = frac * m.capacity_energy_j();
            let v = m.voltage_from_energy(e).unwrap();
            let back = m.energy_from_voltage(v).unwrap();
            prop_assert!((back - e).abs() <= 1e-6 * e.max(1e-3));
        }

        #[test]
        fn additive_in_time(start in 500.0f64..2500.0, p in -20.0f64..20.0,
                            dt1 in 1.0f64..3600.0, dt2 in 1.0f64..3600.0) {
            let m = model();
            let s0 = m.state_from_energy(start).unwrap();
            let two = m.apply_net_power(&m.apply_net_power(&s0, p, dt1).unwrap(), p, dt2).unwrap();
            let one = m.apply_net_power(&s0, p, dt1 + dt2).unwrap();
            prop_assert!((two.stored_energy_j - one.stored_energy_j).abs() < 1e-9);
        }

        #[test]
        fn never_leaves_bounds(powers in proptest::collection::vec(-500.0f64..500.0, 1..200)) {
            let m = model();
            let cap = m.capacity_energy_j();
            let mut s = m.state_from_soc(0.5).unwrap();
            for p in powers {
                s = m.apply_net_power(&s, p, 60.0).unwrap();
                prop_assert!(s.stored_energy_j >= 0.0 && s.stored_energy_j <= cap);
            }
        }
    }
}
