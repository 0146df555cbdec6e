//! Solar energy availability.
//!
//! Irradiance (W/m²) is converted to electrical power delivered to the node
//! through a lumped cell + power-management efficiency. Daily profiles are
//! synthesized as a half-sine between sunrise and sunset, optionally
//! modulated by a seeded per-minute cloud factor.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{field, read_csv_rows, Error, Result};

/// Seconds between irradiance samples (and harvest power readings).
pub const SAMPLE_STEP_S: u32 = 60;

const SECONDS_PER_DAY: u32 = 86_400;
const J_PER_KWH: f64 = 3.6e6;

pub const TRACE_HEADER: [&str; 2] = ["epoch_s", "irradiance_wm2"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarCellSpec {
    pub area_cm2: f64,
    pub cell_efficiency: f64,
    /// Lumped loss of the harvester IC and power path.
    pub harvester_efficiency: f64,
}

impl SolarCellSpec {
    pub fn new(area_cm2: f64, cell_efficiency: f64, harvester_efficiency: f64) -> Result<Self> {
        let cell = Self {
            area_cm2,
            cell_efficiency,
            harvester_efficiency,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area_cm2 > 0.0 && self.area_cm2.is_finite()) {
            return Err(Error::invalid("area_cm2", "must be positive"));
        }
        if !(self.cell_efficiency > 0.0 && self.cell_efficiency <= 1.0) {
            return Err(Error::invalid("cell_efficiency", "must be in (0, 1]"));
        }
        if !(self.harvester_efficiency > 0.0 && self.harvester_efficiency <= 1.0) {
            return Err(Error::invalid("harvester_efficiency", "must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn area_m2(&self) -> f64 {
        self.area_cm2 * 1e-4
    }

    /// Overall conversion from W/m² of irradiance to W at the node supply.
    fn gain_m2(&self) -> f64 {
        self.area_m2() * self.cell_efficiency * self.harvester_efficiency
    }
}

impl Default for SolarCellSpec {
    /// 50 mm x 60 mm cell at 7.5 % effective efficiency behind a 60 %
    /// power path.
    fn default() -> Self {
        Self {
            area_cm2: 30.0,
            cell_efficiency: 0.075,
            harvester_efficiency: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyInsolation {
    /// kWh/m²/day
    pub value: f64,
    pub month_label: String,
}

impl DailyInsolation {
    pub fn new(value: f64, month_label: impl Into<String>) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::invalid("insolation", "must be non-negative"));
        }
        Ok(Self {
            value,
            month_label: month_label.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceTrace {
    pub start_epoch: i64,
    pub step_s: u32,
    /// W/m²
    pub samples: Vec<f64>,
}

impl IrradianceTrace {
    pub fn new(start_epoch: i64, step_s: u32, samples: Vec<f64>) -> Result<Self> {
        if step_s == 0 {
            return Err(Error::invalid("step_s", "must be positive"));
        }
        if let Some(bad) = samples.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid(
                "irradiance",
                format!("sample {bad} is negative or not finite"),
            ));
        }
        Ok(Self {
            start_epoch,
            step_s,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn epoch_at(&self, idx: usize) -> i64 {
        self.start_epoch + idx as i64 * i64::from(self.step_s)
    }

    pub fn duration_s(&self) -> u64 {
        self.samples.len() as u64 * u64::from(self.step_s)
    }

    /// Appends `other`, which must continue on the same grid.
    pub fn extend(&mut self, other: &IrradianceTrace) -> Result<()> {
        if other.step_s != self.step_s {
            return Err(Error::invalid("step_s", "traces use different steps"));
        }
        if !self.is_empty() && other.start_epoch != self.epoch_at(self.len()) {
            return Err(Error::invalid("start_epoch", "traces are not contiguous"));
        }
        if self.is_empty() {
            self.start_epoch = other.start_epoch;
        }
        self.samples.extend_from_slice(&other.samples);
        Ok(())
    }

    /// Trapezoidal integral in kWh/m².
    pub fn insolation_kwh_m2(&self) -> f64 {
        let step = f64::from(self.step_s);
        let ws: f64 = self
            .samples
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * step)
            .sum();
        ws / J_PER_KWH
    }

    pub fn harvest_power_mw(&self, cell: &SolarCellSpec) -> Vec<f64> {
        self.samples
            .iter()
            .map(|&g| instantaneous_harvest(g, cell))
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{}", TRACE_HEADER.join(","))?;
        for (i, g) in self.samples.iter().enumerate() {
            writeln!(out, "{},{}", self.epoch_at(i), g)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Harvested power in mW for an instantaneous irradiance in W/m².
pub fn instantaneous_harvest(irradiance_wm2: f64, cell: &SolarCellSpec) -> f64 {
    irradiance_wm2 * cell.gain_m2() * 1000.0
}

/// Round-the-clock average power (mW) a day of `ins` delivers through `cell`.
/// Multiply by 86.4 for J/day.
pub fn daily_average_power(ins: &DailyInsolation, cell: &SolarCellSpec) -> f64 {
    ins.value * 1000.0 * cell.gain_m2() / 24.0 * 1000.0
}

/// Daily energy in J for a constant `power_mw`.
pub fn mw_to_j_per_day(power_mw: f64) -> f64 {
    power_mw * 86.4
}

/// One day of per-minute irradiance starting at local midnight.
pub fn synthesize_day(
    ins: &DailyInsolation,
    daylight_hours: f64,
    cloud_seed: u64,
    cloud_depth: f64,
) -> Result<IrradianceTrace> {
    if !(daylight_hours > 0.0 && daylight_hours <= 24.0) {
        return Err(Error::OutOfRange {
            quantity: "daylight_hours",
            value: daylight_hours,
            min: 0.0,
            max: 24.0,
        });
    }
    if !(0.0..1.0).contains(&cloud_depth) {
        return Err(Error::OutOfRange {
            quantity: "cloud_depth",
            value: cloud_depth,
            min: 0.0,
            max: 1.0,
        });
    }
    if !(ins.value >= 0.0 && ins.value.is_finite()) {
        return Err(Error::invalid("insolation", "must be non-negative"));
    }

    let length_s = daylight_hours * 3600.0;
    let noon = f64::from(SECONDS_PER_DAY) / 2.0;
    let sunrise = noon - length_s / 2.0;
    // integral of peak * sin(pi t / L) over [0, L] is peak * 2L / pi
    let peak = ins.value * J_PER_KWH * PI / (2.0 * length_s);

    let mut rng = ChaCha8Rng::seed_from_u64(cloud_seed);
    let n = (SECONDS_PER_DAY / SAMPLE_STEP_S) as usize;
    let samples = (0..n)
        .map(|i| {
            // draw every minute so the cloud stream does not depend on daylight length
            let cloud = if cloud_depth > 0.0 {
                rng.gen_range(1.0 - cloud_depth..=1.0)
            } else {
                1.0
            };
            let t = (i as f64) * f64::from(SAMPLE_STEP_S);
            let phase = (t - sunrise) / length_s;
            if (0.0..=1.0).contains(&phase) {
                (peak * (PI * phase).sin()).max(0.0) * cloud
            } else {
                0.0
            }
        })
        .collect();
    IrradianceTrace::new(0, SAMPLE_STEP_S, samples)
}

/// Concatenates one synthesized day per entry of `days`, each with its own
/// cloud seed derived from `seed`.
pub fn synthesize_days(
    days: &[DailyInsolation],
    daylight_hours: f64,
    seed: u64,
    cloud_depth: f64,
) -> Result<IrradianceTrace> {
    let mut trace = IrradianceTrace::new(0, SAMPLE_STEP_S, Vec::new())?;
    for (d, ins) in days.iter().enumerate() {
        let mut day = synthesize_day(
            ins,
            daylight_hours,
            seed.wrapping_add(d as u64)
                .wrapping_mul(0x9E37_79B9_7F4A_7C15),
            cloud_depth,
        )?;
        day.start_epoch = d as i64 * i64::from(SECONDS_PER_DAY);
        trace.extend(&day)?;
    }
    Ok(trace)
}

/// Rectangle-rule energy (J) of once-per-minute power readings in mW.
pub fn integrate_harvest(power_samples_mw: &[f64]) -> f64 {
    power_samples_mw
        .iter()
        .map(|p| p * f64::from(SAMPLE_STEP_S) / 1000.0)
        .sum()
}

pub fn load_trace(path: &Path) -> Result<IrradianceTrace> {
    let rows = read_csv_rows(path, &TRACE_HEADER, |_, rec| {
        let epoch: i64 = field(rec, 0, "epoch_s")?;
        let g: f64 = field(rec, 1, "irradiance_wm2")?;
        if !(g >= 0.0 && g.is_finite()) {
            return Err(format!("irradiance {g} is negative or not finite"));
        }
        Ok((epoch, g))
    })?;
    let Some(&(start, _)) = rows.first() else {
        return IrradianceTrace::new(0, SAMPLE_STEP_S, Vec::new());
    };
    let step = if rows.len() > 1 {
        rows[1].0 - rows[0].0
    } else {
        i64::from(SAMPLE_STEP_S)
    };
    if step <= 0 || step > i64::from(u32::MAX) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 2,
            reason: "timestamps must increase".into(),
        });
    }
    for (i, pair) in rows.windows(2).enumerate() {
        if pair[1].0 - pair[0].0 != step {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: i + 2,
                reason: format!("expected a uniform {step} s step"),
            });
        }
    }
    IrradianceTrace::new(start, step as u32, rows.into_iter().map(|r| r.1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cell(area: f64, eff: f64, harv: f64) -> SolarCellSpec {
        SolarCellSpec::new(area, eff, harv).unwrap()
    }

    #[test]
    fn instantaneous_examples() {
        let c = cell(30.0, 0.10, 1.0);
        assert_eq!(instantaneous_harvest(0.0, &c), 0.0);
        assert_relative_eq!(
            instantaneous_harvest(1000.0, &c),
            300.0,
            max_relative = 1e-12
        );
        // 28 mW/cm² at one sun is a 28 % cell
        let si = cell(30.0, 0.28, 1.0);
        assert_relative_eq!(
            instantaneous_harvest(1000.0, &si),
            840.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn daily_average_examples() {
        let c = cell(30.0, 0.10, 1.0);
        let zero = DailyInsolation::new(0.0, "dec").unwrap();
        assert_eq!(daily_average_power(&zero, &c), 0.0);
        let dec = DailyInsolation::new(1.55, "dec").unwrap();
        let p = daily_average_power(&dec, &c);
        assert_relative_eq!(p, 19.375, max_relative = 1e-12);
        let margin = daily_average_power(&dec, &cell(30.0, 0.10, 0.6));
        assert_relative_eq!(margin, 0.6 * p, max_relative = 1e-12);
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(integrate_harvest(&[0.0; 100]), 0.0);
        assert_relative_eq!(integrate_harvest(&[10.0; 60]), 36.0, max_relative = 1e-12);
        let december = integrate_harvest(&[2.96; 1440]);
        assert_relative_eq!(december, 255.744, max_relative = 1e-9);
        assert!((december - 256.0).abs() < 1.0);
    }

    #[test]
    fn synthesized_day_matches_insolation() {
        let ins = DailyInsolation::new(1.55, "dec").unwrap();
        let trace = synthesize_day(&ins, 9.3, 7, 0.0).unwrap();
        assert_eq!(trace.len(), 1440);
        let err = (trace.insolation_kwh_m2() - 1.55).abs() / 1.55;
        assert!(err < 0.005, "relative error {err}");
        assert_eq!(trace.samples[0], 0.0);
        assert_eq!(trace.samples[1439], 0.0);
    }

    #[test]
    fn zero_insolation_is_dark() {
        let ins = DailyInsolation::new(0.0, "x").unwrap();
        let trace = synthesize_day(&ins, 12.0, 1, 0.5).unwrap();
        assert!(trace.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn same_seed_same_trace() {
        let ins = DailyInsolation::new(4.0, "mar").unwrap();
        let a = synthesize_day(&ins, 12.0, 42, 0.4).unwrap();
        let b = synthesize_day(&ins, 12.0, 42, 0.4).unwrap();
        let c = synthesize_day(&ins, 12.0, 43, 0.4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_daylight_and_depth() {
        let ins = DailyInsolation::new(1.0, "x").unwrap();
        assert!(synthesize_day(&ins, 0.0, 0, 0.0).is_err());
        assert!(synthesize_day(&ins, 24.5, 0, 0.0).is_err());
        assert!(synthesize_day(&ins, 10.0, 0, 1.0).is_err());
        assert!(synthesize_day(&ins, 24.0, 0, 0.0).is_ok());
    }

    #[test]
    fn clouds_only_remove_energy() {
        let ins = DailyInsolation::new(3.0, "x").unwrap();
        let c = SolarCellSpec::default();
        let clear = synthesize_day(&ins, 11.0, 3, 0.0).unwrap();
        let cloudy = synthesize_day(&ins, 11.0, 3, 0.3).unwrap();
        let e_clear = integrate_harvest(&clear.harvest_power_mw(&c));
        let e_cloudy = integrate_harvest(&cloudy.harvest_power_mw(&c));
        let bound = mw_to_j_per_day(daily_average_power(&ins, &c));
        assert!(e_cloudy < e_clear);
        assert!((e_clear - bound).abs() / bound < 0.005);
    }

    #[test]
    fn cell_validation() {
        assert!(SolarCellSpec::new(0.0, 0.1, 0.6).is_err());
        assert!(SolarCellSpec::new(30.0, 0.0, 0.6).is_err());
        assert!(SolarCellSpec::new(30.0, 0.1, 1.2).is_err());
        assert!(SolarCellSpec::new(30.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn trace_csv_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let ins = DailyInsolation::new(2.0, "x").unwrap();
        let trace = synthesize_day(&ins, 10.0, 9, 0.2).unwrap();
        let path = dir.path().join("trace.csv");
        trace.write_csv(&path).unwrap();
        assert_eq!(load_trace(&path).unwrap(), trace);

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "epoch_s,irradiance_wm2\n0,1.0\n60,-3\n").unwrap();
        match load_trace(&bad) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let schema = dir.path().join("schema.csv");
        std::fs::write(&schema, "t,g\n0,1\n").unwrap();
        assert!(matches!(load_trace(&schema), Err(Error::Schema { .. })));
    }
}
