use serde::{Deserialize, Serialize};

use super::signals::{SensorSignal, SignalSource};
use super::PowerModeTable;
use crate::battery::BatteryModel;
use crate::eico::{
    available_energy, daytime_step, select_min_rate, sunset_update, ControllerState, EicoConfig,
};
use crate::error::{Error, Result};
use crate::harvest::{
    integrate_harvest, synthesize_days, DailyInsolation, IrradianceTrace, SolarCellSpec,
    SAMPLE_STEP_S,
};
use crate::isa::{
    AnomalyThresholds, Channel, Detector, OnlinePearson, PerChannel, SensorSample, TxReason,
};
use crate::radio::{PacketMeta, TxPacket, PACKET_LEN};

pub const MINUTES_PER_DAY: usize = 1440;
/// Harvest above this counts as daylight for in-day adaptation (mW).
pub const DAYLIGHT_THRESHOLD_MW: f64 = 0.1;
/// Without a detected sunset for this long the controller re-plans anyway.
pub const REPLAN_AFTER_MIN: usize = 26 * 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunsetDetector {
    pub threshold_mw: f64,
    pub quiet_minutes: u32,
}

impl Default for SunsetDetector {
    fn default() -> Self {
        Self {
            threshold_mw: 0.1,
            quiet_minutes: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Control {
    Adaptive,
    /// Hold one interval for the whole run.
    Fixed(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarvestInput {
    Trace(IrradianceTrace),
    Synthetic {
        days: Vec<DailyInsolation>,
        daylight_hours: f64,
        cloud_depth: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub cell: SolarCellSpec,
    pub battery: BatteryModel,
    pub initial_soc: f64,
    pub eico: EicoConfig,
    pub thresholds: AnomalyThresholds,
    pub modes: PowerModeTable,
    pub duration_days: u32,
    pub harvest: HarvestInput,
    pub sensor: SensorSignal,
    pub seed: u64,
    pub control: Control,
    /// Floor before the first sunset; derived from the battery when absent.
    pub initial_interval_s: Option<u32>,
    pub node_address: u16,
    pub sunset: SunsetDetector,
}

impl SimConfig {
    pub fn minutes(&self) -> usize {
        self.duration_days as usize * MINUTES_PER_DAY
    }

    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        self.battery.validate()?;
        self.modes.validate()?;
        self.thresholds.validate()?;
        self.eico.validate(self.battery.capacity_energy_j())?;
        if self.duration_days < 1 {
            return Err(Error::invalid("duration_days", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::invalid("initial_soc", "must lie in [0, 1]"));
        }
        let ladder = &self.eico.ladder;
        for (&i, &e) in ladder.intervals().iter().zip(ladder.daily_energies()) {
            let expected = self.modes.daily_energy(i);
            if (e - expected).abs() > 1e-9 * expected {
                return Err(Error::Config(format!(
                    "ladder energy {e} J at {i} s disagrees with the power table ({expected} J)"
                )));
            }
        }
        let on_ladder = |i: u32| ladder.rung_of(i).is_some();
        if let Control::Fixed(i) = self.control {
            if !on_ladder(i) {
                return Err(Error::invalid(
                    "control",
                    format!("{i} s is not a ladder interval"),
                ));
            }
        }
        if let Some(i) = self.initial_interval_s {
            if !on_ladder(i) {
                return Err(Error::invalid(
                    "initial_interval_s",
                    format!("{i} s is not a ladder interval"),
                ));
            }
        }
        if !(self.sunset.threshold_mw > 0.0 && self.sunset.quiet_minutes > 0) {
            return Err(Error::invalid(
                "sunset",
                "threshold and quiet period must be positive",
            ));
        }
        Ok(())
    }

    /// Per-minute irradiance covering the run.
    pub fn irradiance(&self) -> Result<IrradianceTrace> {
        let trace = match &self.harvest {
            HarvestInput::Trace(t) => t.clone(),
            HarvestInput::Synthetic {
                days,
                daylight_hours,
                cloud_depth,
            } => synthesize_days(days, *daylight_hours, self.seed, *cloud_depth)?,
        };
        if trace.step_s != SAMPLE_STEP_S {
            return Err(Error::Config(format!(
                "irradiance step is {} s; the simulator runs on {SAMPLE_STEP_S} s ticks",
                trace.step_s
            )));
        }
        if trace.len() < self.minutes() {
            return Err(Error::Config(format!(
                "irradiance covers {} minutes, run needs {}",
                trace.len(),
                self.minutes()
            )));
        }
        Ok(trace)
    }

    pub fn is_adaptive(&self) -> bool {
        self.control == Control::Adaptive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinuteRow {
    pub epoch_s: i64,
    pub p_harv_mw: f64,
    pub p_cons_mw: f64,
    pub e_batt_j: f64,
    pub interval_s: u32,
    pub floor_interval_s: u32,
    /// Energy the battery could not take (> 0) or could not give (< 0).
    pub clipped_j: f64,
    pub tx: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayRow {
    pub day: u32,
    pub e_harv_j: f64,
    pub e_cons_j: f64,
    pub e_clipped_j: f64,
    pub e_batt_start_j: f64,
    pub e_batt_end_j: f64,
    /// Floor in effect when the day ended.
    pub min_interval_s: u32,
    pub fastest_interval_s: u32,
    pub sunset_epoch_s: Option<i64>,
    pub sunset_e_batt_j: Option<f64>,
    pub sunset_e_harv_j: Option<f64>,
    pub sunset_interval_s: Option<u32>,
    pub tx_count: u32,
    pub anomaly_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionTrigger {
    Sunset,
    Timer,
}

/// One floor decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SunsetEvent {
    pub epoch_s: i64,
    pub minute: usize,
    pub e_batt_j: f64,
    pub e_harv_j: f64,
    pub e_avail_j: f64,
    pub interval_s: u32,
    pub trigger: DecisionTrigger,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxRecord {
    pub reason: TxReason,
    pub interval_s: u32,
    pub sample: SensorSample,
    pub packet: [u8; PACKET_LEN],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub minutes: Vec<MinuteRow>,
    pub days: Vec<DayRow>,
    pub decisions: Vec<SunsetEvent>,
    pub transmissions: Vec<TxRecord>,
    pub initial_interval_s: u32,
    pub initial_e_batt_j: f64,
    pub samples_seen: u64,
    /// Pearson r between the sampled stream and its zero-order-hold
    /// reconstruction from transmitted points.
    pub fidelity: PerChannel<Option<f64>>,
    pub died_at: Option<i64>,
}

impl SimResult {
    pub fn alive(&self) -> bool {
        self.died_at.is_none()
    }

    pub fn anomaly_count(&self) -> usize {
        self.transmissions
            .iter()
            .filter(|t| t.reason == TxReason::Anomaly)
            .count()
    }

    pub fn compression_ratio(&self) -> f64 {
        self.samples_seen as f64 / self.transmissions.len().max(1) as f64
    }

    /// Days that end with a detected sunset.
    pub fn sunset_intervals(&self) -> Vec<u32> {
        self.days
            .iter()
            .filter_map(|d| d.sunset_interval_s)
            .collect()
    }
}

#[derive(Debug, Default)]
struct DayAcc {
    e_harv: f64,
    e_cons: f64,
    e_clipped: f64,
    start: f64,
    fastest: u32,
    sunset: Option<SunsetEvent>,
    tx: u32,
    anomalies: u32,
}

impl DayAcc {
    fn new(start: f64) -> Self {
        Self {
            start,
            fastest: u32::MAX,
            ..Default::default()
        }
    }

    fn finish(self, day: u32, end: f64, floor: u32) -> DayRow {
        DayRow {
            day,
            e_harv_j: self.e_harv,
            e_cons_j: self.e_cons,
            e_clipped_j: self.e_clipped,
            e_batt_start_j: self.start,
            e_batt_end_j: end,
            min_interval_s: floor,
            fastest_interval_s: self.fastest,
            sunset_epoch_s: self.sunset.map(|s| s.epoch_s),
            sunset_e_batt_j: self.sunset.map(|s| s.e_batt_j),
            sunset_e_harv_j: self.sunset.map(|s| s.e_harv_j),
            sunset_interval_s: self.sunset.map(|s| s.interval_s),
            tx_count: self.tx,
            anomaly_count: self.anomalies,
        }
    }
}

/// Simulates the node minute by minute with a 1 Hz sensing loop inside each
/// minute. A drained battery ends the run with `died_at` set.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let trace = cfg.irradiance()?;
    let n_min = cfg.minutes();
    let p_harv: Vec<f64> = trace
        .harvest_power_mw(&cfg.cell)
        .into_iter()
        .take(n_min)
        .collect();
    let signal = SignalSource::new(&cfg.sensor, cfg.seed, trace.start_epoch);
    let battery = &cfg.battery;
    let ladder = &cfg.eico.ladder;
    let modes = &cfg.modes;
    let dt = f64::from(SAMPLE_STEP_S);

    let mut bat = battery.state_from_soc(cfg.initial_soc)?;
    let initial_e = bat.stored_energy_j;
    let start_interval = match cfg.control {
        Control::Fixed(i) => i,
        Control::Adaptive => cfg.initial_interval_s.unwrap_or_else(|| {
            select_min_rate(available_energy(initial_e, &cfg.eico, 0.0), ladder)
        }),
    };
    let mut ctl = ControllerState::new(start_interval);
    let mut detector = Detector::new(cfg.thresholds);
    let mut held: Option<SensorSample> = None;
    let mut corr: PerChannel<OnlinePearson> = PerChannel::default();

    let mut minutes = Vec::with_capacity(n_min);
    let mut days = Vec::with_capacity(cfg.duration_days as usize);
    let mut decisions = Vec::new();
    let mut transmissions = Vec::new();
    let mut samples_seen = 0u64;
    let mut died_at = None;

    let mut day = DayAcc::new(initial_e);
    let mut window_start = 0usize;
    let mut last_decision = 0usize;
    let mut day_peak = 0.0f64;
    let mut quiet = 0u32;

    for m in 0..n_min {
        let epoch = trace.epoch_at(m);
        let p_h = p_harv[m];

        if cfg.is_adaptive() && p_h > DAYLIGHT_THRESHOLD_MW {
            ctl = daytime_step(p_h, &ctl, battery.is_full(&bat), &cfg.eico, |i| {
                modes.node_power(i)
            });
        }
        let interval = ctl.current_interval;
        let p_c = modes.node_power(interval);
        let step = battery.charge(&bat, p_h - p_c, dt)?;
        bat = step.state;

        // 1 Hz sensing and anomaly detection
        let rung = ladder.rung_of(interval).unwrap_or(0) as u8;
        let meta = PacketMeta {
            address: cfg.node_address,
            anomaly: false,
            rung,
            avail_power_uw: (p_h * 1000.0).round() as u32,
        };
        let mut tx_this_minute = 0u32;
        for s in 0..i64::from(SAMPLE_STEP_S) {
            let sample = signal.sample(epoch + s)?;
            samples_seen += 1;
            if let Some(reason) = detector.observe(&sample, interval).reason() {
                let anomaly = reason == TxReason::Anomaly;
                let packet =
                    TxPacket::from_sample(&sample, PacketMeta { anomaly, ..meta })?.encode();
                transmissions.push(TxRecord {
                    reason,
                    interval_s: interval,
                    sample,
                    packet,
                });
                held = Some(sample);
                tx_this_minute += 1;
                day.anomalies += u32::from(anomaly);
            }
            let rec = held.unwrap_or(sample);
            for ch in Channel::ALL {
                corr[ch].push(sample.get(ch), rec.get(ch));
            }
        }
        day.tx += tx_this_minute;

        // floor decisions
        if cfg.is_adaptive() {
            day_peak = day_peak.max(p_h);
            if day_peak > cfg.sunset.threshold_mw && p_h < cfg.sunset.threshold_mw {
                quiet += 1;
            } else {
                quiet = 0;
            }
            let trigger = if quiet == cfg.sunset.quiet_minutes {
                Some(DecisionTrigger::Sunset)
            } else if m - last_decision >= REPLAN_AFTER_MIN {
                Some(DecisionTrigger::Timer)
            } else {
                None
            };
            if let Some(trigger) = trigger {
                let e_harv = integrate_harvest(&p_harv[window_start..=m]);
                let e_batt = bat.stored_energy_j;
                let floor = sunset_update(e_batt, e_harv, &cfg.eico);
                ctl.on_sunset(floor, epoch);
                let ev = SunsetEvent {
                    epoch_s: epoch,
                    minute: m,
                    e_batt_j: e_batt,
                    e_harv_j: e_harv,
                    e_avail_j: available_energy(e_batt, &cfg.eico, e_harv),
                    interval_s: floor,
                    trigger,
                };
                decisions.push(ev);
                if trigger == DecisionTrigger::Sunset {
                    day.sunset = Some(ev);
                }
                window_start = m + 1;
                last_decision = m;
                day_peak = 0.0;
                quiet = 0;
            }
        }

        day.e_harv += p_h * dt / 1000.0;
        day.e_cons += p_c * dt / 1000.0;
        day.e_clipped += step.clipped_j;
        day.fastest = day.fastest.min(interval);
        minutes.push(MinuteRow {
            epoch_s: epoch,
            p_harv_mw: p_h,
            p_cons_mw: p_c,
            e_batt_j: bat.stored_energy_j,
            interval_s: interval,
            floor_interval_s: ctl.min_interval_today,
            clipped_j: step.clipped_j,
            tx: tx_this_minute,
        });

        let dead = step.clipped_j < 0.0;
        if dead {
            died_at = Some(epoch);
        }
        if (m + 1) % MINUTES_PER_DAY == 0 || dead || m + 1 == n_min {
            let finished = std::mem::replace(&mut day, DayAcc::new(bat.stored_energy_j));
            days.push(finished.finish(
                days.len() as u32,
                bat.stored_energy_j,
                ctl.min_interval_today,
            ));
        }
        if dead {
            break;
        }
    }

    Ok(SimResult {
        minutes,
        days,
        decisions,
        transmissions,
        initial_interval_s: start_interval,
        initial_e_batt_j: initial_e,
        samples_seen,
        fidelity: PerChannel::from_fn(|ch| corr[ch].r()),
        died_at,
    })
}

/// Per-day |harvested - consumed - stored change - clipped| in J.
pub fn energy_balance(result: &SimResult) -> Vec<f64> {
    result
        .days
        .iter()
        .map(|d| {
            (d.e_harv_j - d.e_cons_j - (d.e_batt_end_j - d.e_batt_start_j) - d.e_clipped_j).abs()
        })
        .collect()
}

/// Residual as a fraction of the day's harvested plus consumed energy.
pub fn relative_energy_balance(result: &SimResult) -> Vec<f64> {
    result
        .days
        .iter()
        .zip(energy_balance(result))
        .map(|(d, r)| r / (d.e_harv_j + d.e_cons_j).max(f64::MIN_POSITIVE))
        .collect()
}

#[cfg(test)]
pub(crate) fn test_config(days: u32, ins: f64, cloud_depth: f64, soc: f64) -> SimConfig {
    SimConfig {
        cell: SolarCellSpec::default(),
        battery: BatteryModel::li_ion(230.0).unwrap(),
        initial_soc: soc,
        eico: EicoConfig::default(),
        thresholds: AnomalyThresholds::default(),
        modes: PowerModeTable::default(),
        duration_days: days,
        harvest: HarvestInput::Synthetic {
            days: (0..days)
                .map(|_| DailyInsolation::new(ins, "").unwrap())
                .collect(),
            daylight_hours: 12.0,
            cloud_depth,
        },
        sensor: SensorSignal::Diurnal,
        seed: 11,
        control: Control::Adaptive,
        initial_interval_s: None,
        node_address: 3,
        sunset: SunsetDetector::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(days: u32, ins: f64, cloud_depth: f64, soc: f64) -> SimConfig {
        test_config(days, ins, cloud_depth, soc)
    }

    #[test]
    fn energy_is_conserved_each_day() {
        let r = run(&cfg(3, 2.0, 0.3, 0.9)).unwrap();
        assert_eq!(r.days.len(), 3);
        for res in relative_energy_balance(&r) {
            assert!(res < 1e-9, "{res}");
        }
        let harv: f64 = r.minutes.iter().map(|m| m.p_harv_mw * 0.06).sum();
        let day_harv: f64 = r.days.iter().map(|d| d.e_harv_j).sum();
        assert!((harv - day_harv).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_run() {
        let c = cfg(2, 1.5, 0.4, 0.7);
        assert_eq!(run(&c).unwrap(), run(&c).unwrap());
        let other = SimConfig {
            seed: 12,
            ..c.clone()
        };
        assert_ne!(run(&c).unwrap().minutes, run(&other).unwrap().minutes);
    }

    #[test]
    fn one_sunset_per_clear_day() {
        let r = run(&cfg(3, 2.0, 0.0, 0.8)).unwrap();
        assert_eq!(r.decisions.len(), 3);
        for (d, ev) in r.decisions.iter().enumerate() {
            assert_eq!(ev.trigger, DecisionTrigger::Sunset);
            // daylight ends at 18:00; ten quiet minutes follow
            let minute_of_day = ev.minute - d * MINUTES_PER_DAY;
            assert!((1080..=1092).contains(&minute_of_day), "{minute_of_day}");
            assert_eq!(
                ev.interval_s,
                sunset_update(ev.e_batt_j, ev.e_harv_j, &EicoConfig::default())
            );
        }
        // the window is the whole day: the first day's harvest is almost all of it
        let first = r.days[0].e_harv_j;
        assert!((r.decisions[0].e_harv_j - first).abs() < 1e-9 * first);
    }

    #[test]
    fn floor_holds_through_the_night() {
        let r = run(&cfg(2, 2.0, 0.0, 0.8)).unwrap();
        let ev = r.decisions[0];
        for m in &r.minutes[ev.minute + 1..ev.minute + 600] {
            assert_eq!(m.interval_s, ev.interval_s);
            assert_eq!(m.p_harv_mw, 0.0);
        }
    }

    #[test]
    fn empty_battery_forces_slowest() {
        let c = cfg(2, 0.05, 0.0, 0.05);
        assert!(c.battery.state_from_soc(0.05).unwrap().stored_energy_j <= c.eico.e_buf_j);
        let r = run(&c).unwrap();
        assert!(!r.decisions.is_empty());
        for ev in &r.decisions {
            assert!(ev.e_batt_j <= c.eico.e_buf_j);
            assert_eq!(ev.interval_s, 300);
        }
    }

    #[test]
    fn dark_node_at_slowest_rate_lasts_a_month() {
        let mut c = cfg(40, 0.0, 0.0, 1.0);
        c.control = Control::Fixed(300);
        let r = run(&c).unwrap();
        let per_minute = c.modes.node_power(300) * 0.06;
        let expected = (c.battery.capacity_energy_j() / per_minute).ceil() as i64 - 1;
        let died = r.died_at.expect("battery should run flat");
        assert!(
            (died / 60 - expected).abs() <= 1,
            "{} vs {expected}",
            died / 60
        );
        assert!(died as f64 / 86_400.0 >= 30.0);
        assert!(r.decisions.is_empty());
        assert!(r.minutes.iter().all(|m| m.interval_s == 300));
        assert_eq!(r.days.len(), 31);
    }

    #[test]
    fn timer_replans_without_sunset() {
        let r = run(&cfg(3, 0.0, 0.0, 1.0)).unwrap();
        assert!(r
            .decisions
            .iter()
            .all(|d| d.trigger == DecisionTrigger::Timer));
        assert_eq!(r.decisions.len(), 3 * MINUTES_PER_DAY / REPLAN_AFTER_MIN);
    }

    #[test]
    fn packets_match_transmissions() {
        let r = run(&cfg(1, 2.0, 0.2, 0.9)).unwrap();
        assert!(!r.transmissions.is_empty());
        let per_minute: u32 = r.minutes.iter().map(|m| m.tx).sum();
        assert_eq!(per_minute as usize, r.transmissions.len());
        for t in r.transmissions.iter().take(50) {
            let p = TxPacket::decode(&t.packet).unwrap();
            assert_eq!(p.address, 3);
            assert_eq!(p.anomaly, t.reason == TxReason::Anomaly);
            assert_eq!(p.to_sample().epoch, t.sample.epoch);
        }
        assert_eq!(r.samples_seen, 86_400);
        assert!(r.fidelity.temperature.unwrap() > 0.99);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = cfg(1, 1.0, 0.0, 0.5);
        c.control = Control::Fixed(7);
        assert!(run(&c).is_err());
        let mut c = cfg(1, 1.0, 0.0, 0.5);
        c.initial_soc = 1.5;
        assert!(run(&c).is_err());
        let mut c = cfg(2, 1.0, 0.0, 0.5);
        c.harvest = HarvestInput::Synthetic {
            days: vec![DailyInsolation::new(1.0, "").unwrap()],
            daylight_hours: 12.0,
            cloud_depth: 0.0,
        };
        assert!(run(&c).is_err());
        let mut c = cfg(1, 1.0, 0.0, 0.5);
        c.modes.tx_event_energy_j *= 2.0;
        assert!(run(&c).is_err());
    }
}
