//! Energy-aware transmission-rate control.
//!
//! Once a day, at sunset, the controller turns stored and harvested energy
//! into a daily energy budget and picks the fastest transmission interval
//! that fits it. During daylight it nudges the interval one rung at a time
//! as harvested power rises above or falls below the node's draw, and jumps
//! straight to the matching rung when the battery is full.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::PowerModeTable;

/// Transmission intervals (s), fastest first.
pub const DEFAULT_INTERVALS_S: [u32; 10] = [1, 2, 5, 10, 20, 30, 60, 120, 180, 300];

pub const LADDER_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLadder {
    intervals: Vec<u32>,
    daily_energy: Vec<f64>,
}

impl RateLadder {
    pub fn new(intervals: Vec<u32>, daily_energy: Vec<f64>) -> Result<Self> {
        if intervals.len() != LADDER_LEN || daily_energy.len() != LADDER_LEN {
            return Err(Error::invalid(
                "ladder",
                format!("needs exactly {LADDER_LEN} rungs"),
            ));
        }
        if intervals.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("ladder", "intervals must strictly increase"));
        }
        if intervals[0] != 1 || intervals[LADDER_LEN - 1] != 300 {
            return Err(Error::invalid(
                "ladder",
                "intervals must run from 1 s to 300 s",
            ));
        }
        if daily_energy.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::invalid(
                "ladder",
                "daily energy must strictly decrease with interval",
            ));
        }
        Ok(Self {
            intervals,
            daily_energy,
        })
    }

    /// Ladder whose daily energies come from the node's mode table.
    pub fn from_modes(intervals: &[u32], modes: &PowerModeTable) -> Result<Self> {
        let energy = intervals.iter().map(|&i| modes.daily_energy(i)).collect();
        Self::new(intervals.to_vec(), energy)
    }

    pub fn intervals(&self) -> &[u32] {
        &self.intervals
    }

    pub fn daily_energies(&self) -> &[f64] {
        &self.daily_energy
    }

    pub fn fastest(&self) -> u32 {
        self.intervals[0]
    }

    pub fn slowest(&self) -> u32 {
        self.intervals[LADDER_LEN - 1]
    }

    /// Rung index of `interval_s`; 0 is the fastest rung.
    pub fn rung_of(&self, interval_s: u32) -> Option<usize> {
        self.intervals.iter().position(|&i| i == interval_s)
    }

    pub fn interval(&self, rung: usize) -> u32 {
        self.intervals[rung]
    }

    pub fn energy_of(&self, interval_s: u32) -> Option<f64> {
        self.rung_of(interval_s).map(|r| self.daily_energy[r])
    }
}

impl Default for RateLadder {
    fn default() -> Self {
        Self::from_modes(&DEFAULT_INTERVALS_S, &PowerModeTable::default())
            .expect("default ladder is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EicoConfig {
    /// Days the node must survive on stored energy alone.
    pub d_max: u32,
    /// Reserve that budgets never touch (J).
    pub e_buf_j: f64,
    /// Share of harvested power kept for charging before speeding up.
    pub charge_fraction: f64,
    pub up_ratio: f64,
    pub down_ratio: f64,
    pub ladder: RateLadder,
}

impl Default for EicoConfig {
    fn default() -> Self {
        Self {
            d_max: 14,
            e_buf_j: 306.36,
            charge_fraction: 0.6,
            up_ratio: 2.5,
            down_ratio: 1.5,
            ladder: RateLadder::default(),
        }
    }
}

impl EicoConfig {
    pub fn validate(&self, capacity_energy_j: f64) -> Result<()> {
        if self.d_max < 1 {
            return Err(Error::invalid("d_max", "must be at least 1 day"));
        }
        if !(self.e_buf_j >= 0.0 && self.e_buf_j < capacity_energy_j) {
            return Err(Error::invalid(
                "e_buf_j",
                format!("must lie in [0, {capacity_energy_j})"),
            ));
        }
        if !(self.charge_fraction >= 0.0 && self.charge_fraction < 1.0) {
            return Err(Error::invalid("charge_fraction", "must lie in [0, 1)"));
        }
        if !(self.down_ratio >= 1.0 && self.up_ratio > self.down_ratio) {
            return Err(Error::invalid(
                "up_ratio",
                "need up_ratio > down_ratio >= 1",
            ));
        }
        Ok(())
    }

    /// Harvest-to-draw ratio required before stepping faster. Both the ratio
    /// and the charging share must be honoured; with the defaults (2.5 and
    /// 60 %) they coincide.
    pub fn step_up_ratio(&self) -> f64 {
        self.up_ratio.max(1.0 / (1.0 - self.charge_fraction))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControllerState {
    pub current_interval: u32,
    pub min_interval_today: u32,
    pub battery_full_mode: bool,
    pub last_sunset_epoch: Option<i64>,
}

impl ControllerState {
    pub fn new(min_interval: u32) -> Self {
        Self {
            current_interval: min_interval,
            min_interval_today: min_interval,
            battery_full_mode: false,
            last_sunset_epoch: None,
        }
    }

    pub fn is_consistent(&self, ladder: &RateLadder) -> bool {
        ladder.rung_of(self.current_interval).is_some()
            && ladder.rung_of(self.min_interval_today).is_some()
            && self.current_interval <= self.min_interval_today
    }

    /// Applies a sunset decision: the new floor takes effect immediately.
    pub fn on_sunset(&mut self, min_interval: u32, epoch: i64) {
        self.min_interval_today = min_interval;
        self.current_interval = min_interval;
        self.battery_full_mode = false;
        self.last_sunset_epoch = Some(epoch);
    }
}

/// Daily energy budget (J): a `d_max`-th of the energy above the reserve plus
/// what was harvested today. Negative when the battery sits below reserve.
pub fn available_energy(e_batt_j: f64, cfg: &EicoConfig, e_harv_j: f64) -> f64 {
    (e_batt_j - cfg.e_buf_j) / f64::from(cfg.d_max) + e_harv_j
}

/// Interval whose daily energy is closest to `e_avail`, moved to slower rungs
/// until it no longer exceeds the budget.
pub fn select_min_rate(e_avail: f64, ladder: &RateLadder) -> u32 {
    if !(e_avail > 0.0) {
        return ladder.slowest();
    }
    let energies = ladder.daily_energies();
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (rung, &e) in energies.iter().enumerate() {
        let gap = (e - e_avail).abs();
        // `<=` so equidistant candidates resolve to the slower rung
        if gap <= best_gap {
            best = rung;
            best_gap = gap;
        }
    }
    while best + 1 < LADDER_LEN && energies[best] > e_avail {
        best += 1;
    }
    ladder.interval(best)
}

/// Sunset decision for the next 24 h.
pub fn sunset_update(e_batt_j: f64, e_harv_today_j: f64, cfg: &EicoConfig) -> u32 {
    if e_batt_j <= cfg.e_buf_j {
        return cfg.ladder.slowest();
    }
    select_min_rate(available_energy(e_batt_j, cfg, e_harv_today_j), &cfg.ladder)
}

/// One daylight minute of rate adaptation.
///
/// Steps one rung faster when harvest covers `step_up_ratio` times the draw
/// of that faster rung, so the charging share survives the switch, and one
/// rung slower (never past the day's floor) when harvest falls below
/// `down_ratio` times the current draw.
pub fn daytime_step(
    p_harv_mw: f64,
    state: &ControllerState,
    battery_full: bool,
    cfg: &EicoConfig,
    mode_power: impl Fn(u32) -> f64,
) -> ControllerState {
    let ladder = &cfg.ladder;
    let mut next = *state;
    if !(p_harv_mw > 0.0) {
        return next;
    }
    let (Some(rung), Some(floor)) = (
        ladder.rung_of(state.current_interval),
        ladder.rung_of(state.min_interval_today),
    ) else {
        return next;
    };

    if battery_full {
        next.battery_full_mode = true;
        let target = ladder
            .intervals()
            .iter()
            .copied()
            .find(|&i| mode_power(i) <= p_harv_mw)
            .unwrap_or(ladder.slowest());
        next.current_interval = target.min(state.min_interval_today);
        return next;
    }
    next.battery_full_mode = false;

    if rung > 0 && p_harv_mw >= cfg.step_up_ratio() * mode_power(ladder.interval(rung - 1)) {
        next.current_interval = ladder.interval(rung - 1);
    } else if rung < floor && p_harv_mw < cfg.down_ratio * mode_power(ladder.interval(rung)) {
        next.current_interval = ladder.interval(rung + 1);
    }
    next
}
