//! Synthetic environmental signals sampled at 1 Hz. Every generator is a pure
//! function of time and seed so long runs need no buffered history.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isa::SensorSample;

const DAY_S: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensorSignal {
    /// Outdoor day/night cycle: temperature swing, anti-correlated humidity,
    /// daylight lux.
    Diurnal,
    /// Indoor baseline with a 2 min heater burst and a fan run of about 7 min every hour.
    HeatCool,
    /// Quiet room with one humidity excursion from 35 %RH to 75 %RH and back
    /// between 15 s and 130 s.
    HumidityExcursion,
    /// Replayed history at 1 Hz; the first row is t = 0.
    Recorded(Vec<SensorSample>),
}

impl SensorSignal {
    pub fn name(&self) -> &'static str {
        match self {
            SensorSignal::Diurnal => "diurnal",
            SensorSignal::HeatCool => "heat-cool",
            SensorSignal::HumidityExcursion => "humidity-excursion",
            SensorSignal::Recorded(_) => "recorded",
        }
    }
}

/// Sum of a few sinusoids with seeded periods and phases.
#[derive(Debug, Clone, PartialEq)]
struct Wobble {
    terms: Vec<(f64, f64, f64)>,
}

impl Wobble {
    fn new(rng: &mut ChaCha8Rng, amplitude: f64, min_period_s: f64, max_period_s: f64) -> Self {
        let n = 4;
        let terms = (0..n)
            .map(|_| {
                let period = rng.gen_range(min_period_s..max_period_s);
                let phase = rng.gen_range(0.0..2.0 * PI);
                (amplitude / n as f64, 2.0 * PI / period, phase)
            })
            .collect();
        Self { terms }
    }

    fn at(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, w, p)| a * (w * t + p).sin())
            .sum()
    }
}

/// Response of a unit first-order lag to a rectangular drive of `on_s`
/// seconds starting at 0.
fn pulse(t: f64, on_s: f64, tau_s: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else if t <= on_s {
        1.0 - (-t / tau_s).exp()
    } else {
        (1.0 - (-on_s / tau_s).exp()) * (-(t - on_s) / tau_s).exp()
    }
}

/// Raised-cosine ramp from 0 at `a` to 1 at `b`.
fn ramp(t: f64, a: f64, b: f64) -> f64 {
    if t <= a {
        0.0
    } else if t >= b {
        1.0
    } else {
        0.5 - 0.5 * (PI * (t - a) / (b - a)).cos()
    }
}

#[derive(Debug, Clone)]
pub struct SignalSource {
    signal: SensorSignal,
    start_epoch: i64,
    temp: Wobble,
    humidity: Wobble,
    lux: Wobble,
}

impl SignalSource {
    pub fn new(signal: &SensorSignal, seed: u64, start_epoch: i64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005E_ED51_67A1);
        let (ta, ha, la, lo, hi) = match signal {
            SensorSignal::Diurnal => (0.4, 1.0, 0.1, 300.0, 3600.0),
            SensorSignal::HeatCool => (0.05, 0.15, 2.0, 120.0, 1800.0),
            _ => (0.02, 0.1, 1.0, 20.0, 120.0),
        };
        Self {
            signal: signal.clone(),
            start_epoch,
            temp: Wobble::new(&mut rng, ta, lo, hi),
            humidity: Wobble::new(&mut rng, ha, lo, hi),
            lux: Wobble::new(&mut rng, la, lo, hi),
        }
    }

    /// Fails only for recorded signals that don't reach `epoch`.
    pub fn sample(&self, epoch: i64) -> Result<SensorSample> {
        let t = (epoch - self.start_epoch) as f64;
        let s = match &self.signal {
            SensorSignal::Diurnal => {
                let tod = (epoch as f64).rem_euclid(DAY_S);
                // warmest mid-afternoon
                let temp =
                    12.0 + 5.0 * (2.0 * PI * (tod - 9.0 * 3600.0) / DAY_S).sin() + self.temp.at(t);
                let humidity = 70.0 - 2.0 * (temp - 12.0) + self.humidity.at(t);
                let day = (tod - 6.0 * 3600.0) / (12.0 * 3600.0);
                let lux = if (0.0..=1.0).contains(&day) {
                    20_000.0 * (PI * day).sin() * (1.0 + self.lux.at(t))
                } else {
                    0.0
                };
                SensorSample::quantized(epoch, temp, humidity, lux)
            }
            SensorSignal::HeatCool => {
                let in_hour = t.rem_euclid(3600.0);
                let heat = pulse(in_hour - 600.0, 120.0, 60.0);
                let cool = pulse(in_hour - 2400.0, 400.0, 120.0);
                let temp = 22.0 + 12.0 * heat - 8.0 * cool + self.temp.at(t);
                let humidity = 45.0 - 16.0 * heat + 8.0 * cool + self.humidity.at(t);
                let lux = 350.0 + self.lux.at(t);
                SensorSample::quantized(epoch, temp, humidity, lux)
            }
            SensorSignal::HumidityExcursion => {
                let rise = ramp(t, 15.0, 45.0) - ramp(t, 80.0, 130.0);
                let humidity = 35.0 + 40.0 * rise + self.humidity.at(t);
                SensorSample::quantized(epoch, 23.0 + self.temp.at(t), humidity, 400.0)
            }
            SensorSignal::Recorded(rows) => {
                let idx = epoch - self.start_epoch;
                let row = usize::try_from(idx)
                    .ok()
                    .and_then(|i| rows.get(i))
                    .ok_or_else(|| {
                        Error::Config(format!("recorded signal has no sample for t = {idx} s"))
                    })?;
                row.with_epoch(epoch)
            }
        };
        Ok(s)
    }

    /// Samples `[start, start + n)` seconds.
    pub fn series(&self, n: u64) -> Result<Vec<SensorSample>> {
        (0..n as i64)
            .map(|i| self.sample(self.start_epoch + i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = SignalSource::new(&SensorSignal::Diurnal, 7, 0)
            .series(600)
            .unwrap();
        let b = SignalSource::new(&SensorSignal::Diurnal, 7, 0)
            .series(600)
            .unwrap();
        let c = SignalSource::new(&SensorSignal::Diurnal, 8, 0)
            .series(600)
            .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ranges_hold() {
        for sig in [
            SensorSignal::Diurnal,
            SensorSignal::HeatCool,
            SensorSignal::HumidityExcursion,
        ] {
            let src = SignalSource::new(&sig, 1, 0);
            for t in (0..86_400).step_by(17) {
                let s = src.sample(t).unwrap();
                assert!((0.0..=100.0).contains(&s.humidity));
                assert!(s.lux >= 0.0);
            }
        }
    }

    #[test]
    fn excursion_shape() {
        let src = SignalSource::new(&SensorSignal::HumidityExcursion, 1, 0);
        assert!((src.sample(5).unwrap().humidity - 35.0).abs() < 0.5);
        assert!((src.sample(60).unwrap().humidity - 75.0).abs() < 0.5);
        assert!((src.sample(150).unwrap().humidity - 35.0).abs() < 0.5);
    }

    #[test]
    fn heater_and_fan_events() {
        let src = SignalSource::new(&SensorSignal::HeatCool, 1, 0);
        let base = src.sample(300).unwrap();
        let hot = src.sample(660).unwrap();
        let cold = src.sample(2700).unwrap();
        assert!(hot.temperature > base.temperature + 6.0);
        assert!(hot.humidity < base.humidity - 8.0);
        assert!(cold.temperature < base.temperature - 4.0);
        // same phase one hour later
        assert!((src.sample(660 + 3600).unwrap().temperature - hot.temperature).abs() < 0.2);
    }

    #[test]
    fn recorded_replays_and_runs_out() {
        let rows: Vec<_> = (0..5)
            .map(|i| SensorSample::quantized(i, i as f64, 50.0, 1.0))
            .collect();
        let src = SignalSource::new(&SensorSignal::Recorded(rows), 0, 100);
        assert_eq!(src.sample(103).unwrap().temperature, 3.0);
        assert_eq!(src.sample(103).unwrap().epoch, 103);
        assert!(src.sample(105).is_err());
        assert!(src.sample(99).is_err());
    }
}
