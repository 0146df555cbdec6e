//! In-sensor analytics: threshold anomaly detection with periodic fallback
//! transmissions, offline threshold calibration, and reconstruction/fidelity
//! metrics for the transmitted stream.

mod calibrate;
mod fidelity;

use std::io::Write;
use std::ops::{Index, IndexMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{field, read_csv_rows, Result};

pub use calibrate::{
    calibrate_thresholds, kmeans_1d, relative_changes, threshold_from_changes, Calibration,
    KMeans1d,
};
pub use fidelity::{fidelity_metrics, pearson, reconstruct_zoh, FidelityMetrics, OnlinePearson};

pub const HISTORY_HEADER: [&str; 4] = ["epoch_s", "temp_c", "rh_pct", "lux"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Temperature,
    Humidity,
    Lux,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Temperature, Channel::Humidity, Channel::Lux];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Temperature => "temperature",
            Channel::Humidity => "humidity",
            Channel::Lux => "lux",
        }
    }
}

/// One value per sensor channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerChannel<T> {
    pub temperature: T,
    pub humidity: T,
    pub lux: T,
}

impl<T> PerChannel<T> {
    pub fn from_fn(mut f: impl FnMut(Channel) -> T) -> Self {
        Self {
            temperature: f(Channel::Temperature),
            humidity: f(Channel::Humidity),
            lux: f(Channel::Lux),
        }
    }
}

impl<T> Index<Channel> for PerChannel<T> {
    type Output = T;
    fn index(&self, ch: Channel) -> &T {
        match ch {
            Channel::Temperature => &self.temperature,
            Channel::Humidity => &self.humidity,
            Channel::Lux => &self.lux,
        }
    }
}

impl<T> IndexMut<Channel> for PerChannel<T> {
    fn index_mut(&mut self, ch: Channel) -> &mut T {
        match ch {
            Channel::Temperature => &mut self.temperature,
            Channel::Humidity => &mut self.humidity,
            Channel::Lux => &mut self.lux,
        }
    }
}

/// A quantized environmental reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub epoch: i64,
    /// °C, 0.01 resolution
    pub temperature: f64,
    /// %RH, 0.01 resolution
    pub humidity: f64,
    pub lux: f64,
}

fn centi(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl SensorSample {
    /// Rounds to the sensors' 0.01 resolution and clamps humidity and lux
    /// into their physical ranges.
    pub fn quantized(epoch: i64, temperature: f64, humidity: f64, lux: f64) -> Self {
        Self {
            epoch,
            temperature: centi(temperature),
            humidity: centi(humidity.clamp(0.0, 100.0)),
            lux: centi(lux.max(0.0)),
        }
    }

    pub fn get(&self, ch: Channel) -> f64 {
        match ch {
            Channel::Temperature => self.temperature,
            Channel::Humidity => self.humidity,
            Channel::Lux => self.lux,
        }
    }

    pub fn with_epoch(mut self, epoch: i64) -> Self {
        self.epoch = epoch;
        self
    }
}

/// Per-channel relative change thresholds with absolute floors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyThresholds {
    /// Fraction of the last anomaly value, in (0, 1).
    pub relative: PerChannel<f64>,
    /// Smallest absolute change that can count, in channel units.
    pub floor: PerChannel<f64>,
}

pub const DEFAULT_RELATIVE_THRESHOLD: f64 = 0.05;

impl Default for AnomalyThresholds {
    fn default() -> Self {
        Self::uniform(DEFAULT_RELATIVE_THRESHOLD)
    }
}

impl AnomalyThresholds {
    pub fn uniform(x: f64) -> Self {
        Self {
            relative: PerChannel {
                temperature: x,
                humidity: x,
                lux: x,
            },
            floor: PerChannel {
                temperature: 0.2,
                humidity: 0.5,
                lux: 1.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for ch in Channel::ALL {
            let x = self.relative[ch];
            if !(x > 0.0 && x < 1.0) {
                return Err(crate::Error::invalid(
                    "threshold",
                    format!("{} threshold {x} outside (0, 1)", ch.name()),
                ));
            }
            if !(self.floor[ch] >= 0.0) {
                return Err(crate::Error::invalid(
                    "threshold floor",
                    "must be non-negative",
                ));
            }
        }
        Ok(())
    }

    /// Absolute change that triggers on `ch` given the last anomaly value.
    pub fn trigger_delta(&self, ch: Channel, last_value: f64) -> f64 {
        (self.relative[ch] * last_value.abs()).max(self.floor[ch])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxReason {
    Anomaly,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxDecision {
    Hold,
    Transmit {
        reason: TxReason,
        channel: Option<Channel>,
    },
}

impl TxDecision {
    pub fn transmits(&self) -> bool {
        matches!(self, TxDecision::Transmit { .. })
    }

    pub fn is_anomaly(&self) -> bool {
        matches!(
            self,
            TxDecision::Transmit {
                reason: TxReason::Anomaly,
                ..
            }
        )
    }

    pub fn reason(&self) -> Option<TxReason> {
        match self {
            TxDecision::Hold => None,
            TxDecision::Transmit { reason, .. } => Some(*reason),
        }
    }
}

// quantized inputs; absorbs representation error at the inclusive boundary
const BOUNDARY_EPS: f64 = 1e-9;

/// Anomaly test against the last anomaly sample. The first channel (in
/// temperature, humidity, lux order) whose change reaches its threshold is
/// reported.
pub fn detect(
    sample: &SensorSample,
    last_anomaly: &SensorSample,
    th: &AnomalyThresholds,
) -> TxDecision {
    for ch in Channel::ALL {
        let last = last_anomaly.get(ch);
        let delta = (sample.get(ch) - last).abs();
        if delta + BOUNDARY_EPS >= th.trigger_delta(ch, last) {
            return TxDecision::Transmit {
                reason: TxReason::Anomaly,
                channel: Some(ch),
            };
        }
    }
    TxDecision::Hold
}

pub fn periodic_due(now: i64, last_tx: i64, interval_s: u32) -> bool {
    now - last_tx >= i64::from(interval_s)
}

/// Per-node detector state: last anomaly sample and last transmission time.
#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub thresholds: AnomalyThresholds,
    last_anomaly: Option<SensorSample>,
    last_tx: i64,
}

impl Detector {
    pub fn new(thresholds: AnomalyThresholds) -> Self {
        Self {
            thresholds,
            last_anomaly: None,
            last_tx: i64::MIN,
        }
    }

    pub fn last_anomaly(&self) -> Option<&SensorSample> {
        self.last_anomaly.as_ref()
    }

    /// Feeds one sample. The first sample of a run is always sent and seeds
    /// the anomaly reference. Any transmission restarts the periodic timer.
    pub fn observe(&mut self, sample: &SensorSample, interval_s: u32) -> TxDecision {
        let Some(last) = self.last_anomaly else {
            self.last_anomaly = Some(*sample);
            self.last_tx = sample.epoch;
            return TxDecision::Transmit {
                reason: TxReason::Periodic,
                channel: None,
            };
        };
        let decision = detect(sample, &last, &self.thresholds);
        if decision.transmits() {
            self.last_anomaly = Some(*sample);
            self.last_tx = sample.epoch;
            return decision;
        }
        if periodic_due(sample.epoch, self.last_tx, interval_s) {
            self.last_tx = sample.epoch;
            return TxDecision::Transmit {
                reason: TxReason::Periodic,
                channel: None,
            };
        }
        TxDecision::Hold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub sample: SensorSample,
    pub reason: TxReason,
    pub interval_s: u32,
}

/// Runs a fresh detector over `samples` at a fixed periodic interval.
pub fn run_detector(
    samples: &[SensorSample],
    th: &AnomalyThresholds,
    interval_s: u32,
) -> Vec<Transmission> {
    let mut det = Detector::new(*th);
    samples
        .iter()
        .filter_map(|s| {
            det.observe(s, interval_s)
                .reason()
                .map(|reason| Transmission {
                    sample: *s,
                    reason,
                    interval_s,
                })
        })
        .collect()
}

pub fn load_history(path: &Path) -> Result<Vec<SensorSample>> {
    read_csv_rows(path, &HISTORY_HEADER, |_, rec| {
        let epoch: i64 = field(rec, 0, "epoch_s")?;
        let t: f64 = field(rec, 1, "temp_c")?;
        let h: f64 = field(rec, 2, "rh_pct")?;
        let l: f64 = field(rec, 3, "lux")?;
        if !(0.0..=100.0).contains(&h) {
            return Err(format!("humidity {h} outside [0, 100]"));
        }
        if !(l >= 0.0) {
            return Err(format!("lux {l} is negative"));
        }
        Ok(SensorSample {
            epoch,
            temperature: t,
            humidity: h,
            lux: l,
        })
    })
}

pub fn write_history(path: &Path, samples: &[SensorSample]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", HISTORY_HEADER.join(","))?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{}",
            s.epoch, s.temperature, s.humidity, s.lux
        )?;
    }
    out.flush()?;
    Ok(())
}
