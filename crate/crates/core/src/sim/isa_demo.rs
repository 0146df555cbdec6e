use serde::Serialize;

use super::signals::{SensorSignal, SignalSource};
use crate::error::{Error, Result};
use crate::isa::{
    fidelity_metrics, reconstruct_zoh, run_detector, AnomalyThresholds, FidelityMetrics,
    SensorSample, Transmission, TxReason,
};

/// Detector-only replay: a node held at one transmission interval, no energy
/// model.
#[derive(Debug, Clone, PartialEq)]
pub struct IsaDemoConfig {
    pub signal: SensorSignal,
    pub duration_s: u32,
    pub interval_s: u32,
    /// Interval of the uncompressed reference device.
    pub baseline_interval_s: u32,
    pub thresholds: AnomalyThresholds,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsaDemoResult {
    #[serde(skip)]
    pub samples: Vec<SensorSample>,
    #[serde(skip)]
    pub transmissions: Vec<Transmission>,
    pub anomaly_count: usize,
    pub periodic_count: usize,
    pub baseline_tx: usize,
    /// Against the sampled stream.
    pub metrics: FidelityMetrics,
    /// Reference transmissions over compressed transmissions.
    pub compression_vs_baseline: f64,
}

pub fn run_isa_demo(cfg: &IsaDemoConfig) -> Result<IsaDemoResult> {
    if cfg.duration_s < 2 {
        return Err(Error::invalid("duration_s", "need at least two samples"));
    }
    if cfg.interval_s == 0 || cfg.baseline_interval_s == 0 {
        return Err(Error::invalid("interval_s", "must be positive"));
    }
    cfg.thresholds.validate()?;
    let samples = SignalSource::new(&cfg.signal, cfg.seed, 0).series(u64::from(cfg.duration_s))?;
    let transmissions = run_detector(&samples, &cfg.thresholds, cfg.interval_s);
    let baseline_tx = run_detector(&samples, &cfg.thresholds, cfg.baseline_interval_s).len();
    let sent: Vec<SensorSample> = transmissions.iter().map(|t| t.sample).collect();
    let timeline: Vec<i64> = samples.iter().map(|s| s.epoch).collect();
    let reconstruction = reconstruct_zoh(&sent, &timeline)?;
    let metrics = fidelity_metrics(&samples, &reconstruction, sent.len())?;
    let anomaly_count = transmissions
        .iter()
        .filter(|t| t.reason == TxReason::Anomaly)
        .count();
    Ok(IsaDemoResult {
        periodic_count: transmissions.len() - anomaly_count,
        anomaly_count,
        baseline_tx,
        compression_vs_baseline: baseline_tx as f64 / sent.len() as f64,
        metrics,
        samples,
        transmissions,
    })
}
