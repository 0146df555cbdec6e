use serde::Serialize;

use super::kernel::{SimConfig, SimResult};
use crate::eico::sunset_update;

/// Outcome of one counterfactual: the harvester fails at a floor decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerpetuityCheck {
    pub epoch_s: i64,
    pub e_batt_j: f64,
    pub interval_s: u32,
    /// Interval the node falls back to on the first harvest-free day.
    pub reserve_interval_s: u32,
    /// Lowest stored energy over the harvest-free horizon.
    pub min_energy_j: f64,
    /// `min_energy_j - e_buf`; positive means the reserve held.
    pub margin_j: f64,
    /// Margin if the decided interval were held for the whole horizon with
    /// no re-planning.
    pub static_margin_j: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerpetuityReport {
    pub d_max: u32,
    pub e_buf_j: f64,
    pub checks: Vec<PerpetuityCheck>,
}

impl PerpetuityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn min_margin_j(&self) -> Option<f64> {
        self.checks
            .iter()
            .map(|c| c.margin_j)
            .min_by(f64::total_cmp)
    }
}

/// Replays `d_max` days without harvest after the run start and after every
/// floor decision. An adaptive node re-plans once a day on stored energy
/// alone; a fixed node keeps its interval.
pub fn verify_perpetuity(result: &SimResult, cfg: &SimConfig) -> PerpetuityReport {
    let e_buf = cfg.eico.e_buf_j;
    let d_max = cfg.eico.d_max;
    let daily = |i: u32| cfg.modes.daily_energy(i);

    let starts = std::iter::once((
        result.minutes.first().map_or(0, |m| m.epoch_s),
        result.initial_e_batt_j,
        result.initial_interval_s,
    ))
    .chain(
        result
            .decisions
            .iter()
            .map(|d| (d.epoch_s, d.e_batt_j, d.interval_s)),
    );

    let checks = starts
        .map(|(epoch_s, e0, floor)| {
            let plan = |e: f64| {
                if cfg.is_adaptive() {
                    sunset_update(e, 0.0, &cfg.eico)
                } else {
                    floor
                }
            };
            let reserve_interval = plan(e0);
            let mut e = e0;
            let mut min_e = e0;
            for _ in 0..d_max {
                e -= daily(plan(e));
                min_e = min_e.min(e);
            }
            let margin = min_e - e_buf;
            PerpetuityCheck {
                epoch_s,
                e_batt_j: e0,
                interval_s: floor,
                reserve_interval_s: reserve_interval,
                min_energy_j: min_e,
                margin_j: margin,
                static_margin_j: e0 - f64::from(d_max) * daily(floor) - e_buf,
                pass: margin > 0.0,
            }
        })
        .collect();

    PerpetuityReport {
        d_max,
        e_buf_j: e_buf,
        checks,
    }
}
