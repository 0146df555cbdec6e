//! Offline threshold calibration: two-cluster 1-D k-means over successive
//! relative changes, threshold at the midpoint between the quiet cluster and
//! the next one.

use super::{AnomalyThresholds, Channel, PerChannel, SensorSample, DEFAULT_RELATIVE_THRESHOLD};
use crate::error::{Error, Result};

pub const MIN_HISTORY: usize = 1000;
pub const MAX_ITERATIONS: usize = 100;
pub const CONVERGENCE: f64 = 1e-9;
pub const THRESHOLD_RANGE: (f64, f64) = (0.01, 0.20);

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans1d {
    /// Sorted ascending.
    pub centroids: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub thresholds: AnomalyThresholds,
    /// Channels with no usable variation; they received the default.
    pub degenerate: Vec<Channel>,
}

/// Lloyd iterations on scalar data. Centroids start evenly spread from the
/// minimum to the maximum (for k = 2: exactly min and max).
pub fn kmeans_1d(values: &[f64], k: usize) -> Option<KMeans1d> {
    if values.is_empty() || k == 0 {
        return None;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut centroids: Vec<f64> = if k == 1 {
        vec![lo]
    } else {
        (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for &v in values {
            let nearest = nearest(&centroids, v);
            sums[nearest] += v;
            counts[nearest] += 1;
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] > 0 {
                let next = sums[c] / counts[c] as f64;
                shift = shift.max((next - centroids[c]).abs());
                centroids[c] = next;
            }
        }
        if shift <= CONVERGENCE {
            converged = true;
            break;
        }
    }
    centroids.sort_by(f64::total_cmp);
    Some(KMeans1d {
        centroids,
        iterations,
        converged,
    })
}

fn nearest(centroids: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, c) in centroids.iter().enumerate().skip(1) {
        if (v - c).abs() < (v - centroids[best]).abs() {
            best = i;
        }
    }
    best
}

/// |v[i] - v[i-1]| / |v[i-1]|, skipping steps from an exact zero.
pub fn relative_changes(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .filter(|w| w[0] != 0.0)
        .map(|w| ((w[1] - w[0]) / w[0]).abs())
        .collect()
}

/// Threshold from a set of relative changes; `None` if they carry no spread.
pub fn threshold_from_changes(changes: &[f64], k: usize) -> Option<f64> {
    let km = kmeans_1d(changes, k.max(2))?;
    let (a, b) = (km.centroids[0], km.centroids[1]);
    if !(b > a) {
        return None;
    }
    Some((0.5 * (a + b)).clamp(THRESHOLD_RANGE.0, THRESHOLD_RANGE.1))
}

pub fn calibrate_thresholds(history: &[SensorSample], k: usize) -> Result<Calibration> {
    if history.len() < MIN_HISTORY {
        return Err(Error::invalid(
            "history",
            format!("need at least {MIN_HISTORY} samples, got {}", history.len()),
        ));
    }
    if k < 2 {
        return Err(Error::invalid("k", "need at least two clusters"));
    }
    let mut thresholds = AnomalyThresholds::default();
    let mut degenerate = Vec::new();
    let mut relative = PerChannel::default();
    for ch in Channel::ALL {
        let series: Vec<f64> = history.iter().map(|s| s.get(ch)).collect();
        match threshold_from_changes(&relative_changes(&series), k) {
            Some(x) => relative[ch] = x,
            None => {
                relative[ch] = DEFAULT_RELATIVE_THRESHOLD;
                degenerate.push(ch);
            }
        }
    }
    thresholds.relative = relative;
    Ok(Calibration {
        thresholds,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exhaustive optimal 2-partition of sorted 1-D data (minimum SSE).
    fn brute_force_two_means(values: &[f64]) -> (f64, f64) {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for split in 1..v.len() {
            let (l, r) = v.split_at(split);
            let ml = l.iter().sum::<f64>() / l.len() as f64;
            let mr = r.iter().sum::<f64>() / r.len() as f64;
            let sse: f64 = l.iter().map(|x| (x - ml).powi(2)).sum::<f64>()
                + r.iter().map(|x| (x - mr).powi(2)).sum::<f64>();
            if sse < best.0 {
                best = (sse, ml, mr);
            }
        }
        (best.1, best.2)
    }

    #[test]
    fn bimodal_midpoint() {
        let changes: Vec<f64> = (0..500).flat_map(|_| [0.01, 0.11]).collect();
        let x = threshold_from_changes(&changes, 2).unwrap();
        assert_relative_eq!(x, 0.06, max_relative = 1e-12);
        let (a, b) = brute_force_two_means(&changes);
        assert_relative_eq!(0.5 * (a + b), x, max_relative = 1e-12);
    }

    #[test]
    fn constant_channel_gets_default() {
        let hist: Vec<_> = (0..1200)
            .map(|t| SensorSample::quantized(t, 20.0 + (t as f64 * 0.01).sin(), 40.0, 0.0))
            .collect();
        let cal = calibrate_thresholds(&hist, 2).unwrap();
        assert_eq!(cal.thresholds.relative.humidity, 0.05);
        assert_eq!(cal.thresholds.relative.lux, 0.05);
        assert!(cal.degenerate.contains(&Channel::Humidity));
        assert!(cal.degenerate.contains(&Channel::Lux));
        assert!(!cal.degenerate.contains(&Channel::Temperature));
    }

    #[test]
    fn short_history_rejected() {
        let hist: Vec<_> = (0..999)
            .map(|t| SensorSample::quantized(t, 1.0, 2.0, 3.0))
            .collect();
        assert!(calibrate_thresholds(&hist, 2).is_err());
    }

    #[test]
    fn four_week_diurnal_trace_lands_in_range() {
        // one reading every 10 min for 28 days with deterministic jitter
        let hist: Vec<_> = (0..28 * 144)
            .map(|i| {
                let day = i as f64 / 144.0;
                let jitter = ((i * 7919) % 101) as f64 / 100.0 - 0.5;
                let t = 12.0 + 8.0 * (2.0 * std::f64::consts::PI * day).sin() + jitter;
                SensorSample::quantized(i as i64 * 600, t, 60.0 - 2.0 * t, 0.0)
            })
            .collect();
        let changes = relative_changes(&hist.iter().map(|s| s.temperature).collect::<Vec<_>>());
        let x = threshold_from_changes(&changes, 2).unwrap();
        assert!((0.01..=0.20).contains(&x));
        let (a, b) = brute_force_two_means(&changes);
        let oracle = (0.5 * (a + b)).clamp(0.01, 0.20);
        assert!(
            (x - oracle).abs() < 0.01,
            "lloyd {x} vs exhaustive {oracle}"
        );
        let cal = calibrate_thresholds(&hist, 2).unwrap();
        assert!((0.01..=0.20).contains(&cal.thresholds.relative.temperature));
    }

    #[test]
    fn kmeans_converges_on_separated_data() {
        let data = [1.0, 1.1, 0.9, 5.0, 5.1, 4.9];
        let km = kmeans_1d(&data, 2).unwrap();
        assert!(km.converged);
        assert_relative_eq!(km.centroids[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(km.centroids[1], 5.0, max_relative = 1e-12);
        assert!(kmeans_1d(&[], 2).is_none());
    }
}
