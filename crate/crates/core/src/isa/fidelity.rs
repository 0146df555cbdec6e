use serde::{Deserialize, Serialize};

use super::{Channel, PerChannel, SensorSample};
use crate::error::{Error, Result};

/// Zero-order hold of `transmitted` onto `timeline`. Epochs before the first
/// transmission take the first transmitted value.
pub fn reconstruct_zoh(
    transmitted: &[SensorSample],
    timeline: &[i64],
) -> Result<Vec<SensorSample>> {
    let first = transmitted
        .first()
        .ok_or_else(|| Error::invalid("transmitted", "nothing was transmitted"))?;
    if transmitted.windows(2).any(|w| w[1].epoch < w[0].epoch) {
        return Err(Error::invalid("transmitted", "epochs must be sorted"));
    }
    let mut idx = 0;
    let mut held = *first;
    let mut out = Vec::with_capacity(timeline.len());
    for &t in timeline {
        while idx < transmitted.len() && transmitted[idx].epoch <= t {
            held = transmitted[idx];
            idx += 1;
        }
        out.push(held.with_epoch(t));
    }
    Ok(out)
}

/// Pearson product-moment correlation; `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mut acc = OnlinePearson::default();
    for (a, b) in x.iter().zip(y) {
        acc.push(*a, *b);
    }
    acc.r()
}

/// Streaming Pearson accumulator (Welford co-moments).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OnlinePearson {
    n: u64,
    mean_x: f64,
    mean_y: f64,
    m2x: f64,
    m2y: f64,
    cxy: f64,
}

impl OnlinePearson {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
        self.cxy += dx * (y - self.mean_y);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn r(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let scale = self.m2x.abs().max(self.m2y.abs()).max(1.0);
        if self.m2x <= 1e-12 * scale || self.m2y <= 1e-12 * scale {
            return None;
        }
        Some((self.cxy / (self.m2x * self.m2y).sqrt()).clamp(-1.0, 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityMetrics {
    pub compression_ratio: f64,
    /// `None` where the original channel has no variance.
    pub pearson: PerChannel<Option<f64>>,
    pub info_loss_fraction: f64,
}

pub fn fidelity_metrics(
    original: &[SensorSample],
    reconstructed: &[SensorSample],
    n_tx: usize,
) -> Result<FidelityMetrics> {
    if original.len() != reconstructed.len() {
        return Err(Error::invalid(
            "reconstructed",
            format!(
                "length {} differs from original {}",
                reconstructed.len(),
                original.len()
            ),
        ));
    }
    if original.len() < 2 {
        return Err(Error::invalid("original", "need at least two samples"));
    }
    if n_tx == 0 {
        return Err(Error::invalid("n_tx", "must be positive"));
    }
    let len = original.len() as f64;
    let pearson = PerChannel::from_fn(|ch: Channel| {
        let x: Vec<f64> = original.iter().map(|s| s.get(ch)).collect();
        let y: Vec<f64> = reconstructed.iter().map(|s| s.get(ch)).collect();
        pearson(&x, &y)
    });
    Ok(FidelityMetrics {
        compression_ratio: len / n_tx as f64,
        pearson,
        info_loss_fraction: 1.0 - n_tx as f64 / len,
    })
}
