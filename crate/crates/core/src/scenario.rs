//! Named presets and TOML scenario files.
//!
//! A scenario file names a preset and overrides any of its fields:
//!
//! ```toml
//! preset = "december-indiana"
//! seed = 7
//! duration_days = 10
//!
//! [eico]
//! d_max = 14
//! e_buf_fraction = 0.1
//!
//! [harvest]
//! insolation_kwh_m2 = [1.2, 0.4, 2.0]
//! cloud_depth = 0.2
//! ```
//!
//! Top-level keys: `preset`, `seed`, `duration_days`, `initial_soc`,
//! `initial_interval_s`, `fixed_interval_s`, `node_address`. Tables:
//! `[cell]` (`area_cm2`, `cell_efficiency`, `harvester_efficiency`),
//! `[battery]` (`capacity_mah`, `nominal_voltage`, `curve_csv`), `[eico]`
//! (`d_max`, `e_buf_j`, `e_buf_fraction`, `charge_fraction`, `up_ratio`,
//! `down_ratio`, `ladder_intervals_s`), `[harvest]` (`insolation_kwh_m2`,
//! `daylight_hours`, `cloud_depth`, `trace_csv`), `[sensor]` (`signal`,
//! `history_csv`), `[thresholds]` (`temperature`, `humidity`, `lux`), `[isa]`
//! (`duration_s`, `interval_s`, `baseline_interval_s`), `[sunset]`
//! (`threshold_mw`, `quiet_minutes`) and `[modes]` (power-table fields).
//! Relative paths resolve against the scenario file's directory.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::battery::{BatteryModel, LI_ION_CURVE};
use crate::eico::{EicoConfig, RateLadder, DEFAULT_INTERVALS_S};
use crate::error::{Error, Result};
use crate::harvest::{load_trace, DailyInsolation, SolarCellSpec};
use crate::isa::{load_history, AnomalyThresholds};
use crate::sim::{
    Control, HarvestInput, IsaDemoConfig, PowerModeTable, SensorSignal, SimConfig, SunsetDetector,
};

pub const PRESETS: [&str; 5] = [
    "december-indiana",
    "june-indiana",
    "march-clear-day",
    "fig7-anomaly-demo",
    "sec4c-compression-demo",
];

pub const DEFAULT_SEED: u64 = 2020;

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Node(Box<SimConfig>),
    Isa(IsaDemoConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarvestSpec {
    Synthetic {
        insolation_kwh_m2: Vec<f64>,
        daylight_hours: f64,
        cloud_depth: f64,
    },
    TraceCsv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensorSpec {
    Generator(SensorSignal),
    HistoryCsv(PathBuf),
}

/// Plain-data description of a node run, before files are read.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub duration_days: u32,
    pub initial_soc: f64,
    pub initial_interval_s: Option<u32>,
    pub fixed_interval_s: Option<u32>,
    pub node_address: u16,
    pub cell: SolarCellSpec,
    pub capacity_mah: f64,
    pub nominal_voltage: f64,
    pub curve_csv: Option<PathBuf>,
    pub d_max: u32,
    pub e_buf_fraction: f64,
    pub e_buf_j: Option<f64>,
    pub charge_fraction: f64,
    pub up_ratio: f64,
    pub down_ratio: f64,
    pub ladder_intervals_s: Vec<u32>,
    pub modes: PowerModeTable,
    pub thresholds: AnomalyThresholds,
    pub harvest: HarvestSpec,
    pub sensor: SensorSpec,
    pub sunset: SunsetDetector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsaSpec {
    pub signal: SensorSpec,
    pub duration_s: u32,
    pub interval_s: u32,
    pub baseline_interval_s: u32,
    pub thresholds: AnomalyThresholds,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    Node(Box<NodeSpec>),
    Isa(IsaSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedScenario {
    pub name: String,
    pub seed: u64,
    pub spec: ScenarioSpec,
}

/// Per-day insolation drawn uniformly from `[lo, hi]`.
pub fn draw_insolation(lo: f64, hi: f64, days: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EA5_0A11);
    (0..days).map(|_| rng.gen_range(lo..=hi)).collect()
}

fn node_defaults(duration_days: u32, harvest: HarvestSpec) -> NodeSpec {
    let eico = EicoConfig::default();
    NodeSpec {
        duration_days,
        initial_soc: 1.0,
        initial_interval_s: None,
        fixed_interval_s: None,
        node_address: 1,
        cell: SolarCellSpec::default(),
        capacity_mah: 230.0,
        nominal_voltage: 3.7,
        curve_csv: None,
        d_max: eico.d_max,
        e_buf_fraction: 0.1,
        e_buf_j: None,
        charge_fraction: eico.charge_fraction,
        up_ratio: eico.up_ratio,
        down_ratio: eico.down_ratio,
        ladder_intervals_s: DEFAULT_INTERVALS_S.to_vec(),
        modes: PowerModeTable::default(),
        thresholds: AnomalyThresholds::default(),
        harvest,
        sensor: SensorSpec::Generator(SensorSignal::Diurnal),
        sunset: SunsetDetector::default(),
    }
}

pub fn preset(name: &str, seed: u64) -> Result<ScenarioSpec> {
    let spec = match name {
        "december-indiana" => {
            let days = 15;
            ScenarioSpec::Node(Box::new(node_defaults(
                days,
                HarvestSpec::Synthetic {
                    insolation_kwh_m2: draw_insolation(0.15, 2.95, days, seed),
                    daylight_hours: 9.3,
                    cloud_depth: 0.3,
                },
            )))
        }
        "june-indiana" => {
            let days = 15;
            ScenarioSpec::Node(Box::new(node_defaults(
                days,
                HarvestSpec::Synthetic {
                    insolation_kwh_m2: draw_insolation(4.9, 5.9, days, seed),
                    daylight_hours: 15.2,
                    cloud_depth: 0.1,
                },
            )))
        }
        "march-clear-day" => {
            let mut n = node_defaults(
                2,
                HarvestSpec::Synthetic {
                    insolation_kwh_m2: vec![2.6, 2.6],
                    daylight_hours: 12.05,
                    cloud_depth: 0.0,
                },
            );
            n.initial_soc = 0.6;
            n.initial_interval_s = Some(5);
            ScenarioSpec::Node(Box::new(n))
        }
        "fig7-anomaly-demo" => ScenarioSpec::Isa(IsaSpec {
            signal: SensorSpec::Generator(SensorSignal::HumidityExcursion),
            duration_s: 180,
            interval_s: 60,
            baseline_interval_s: 1,
            thresholds: AnomalyThresholds::uniform(0.05),
        }),
        "sec4c-compression-demo" => ScenarioSpec::Isa(IsaSpec {
            signal: SensorSpec::Generator(SensorSignal::HeatCool),
            duration_s: 36_000,
            interval_s: 300,
            baseline_interval_s: 1,
            thresholds: AnomalyThresholds::uniform(0.05),
        }),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; known presets: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(spec)
}

fn signal_by_name(name: &str) -> Result<SensorSignal> {
    match name {
        "diurnal" => Ok(SensorSignal::Diurnal),
        "heat-cool" => Ok(SensorSignal::HeatCool),
        "humidity-excursion" => Ok(SensorSignal::HumidityExcursion),
        other => Err(Error::Config(format!(
            "unknown sensor signal `{other}` (diurnal, heat-cool, humidity-excursion)"
        ))),
    }
}

fn resolve_signal(spec: &SensorSpec) -> Result<SensorSignal> {
    match spec {
        SensorSpec::Generator(s) => Ok(s.clone()),
        SensorSpec::HistoryCsv(path) => Ok(SensorSignal::Recorded(load_history(path)?)),
    }
}

impl NodeSpec {
    pub fn build(&self, seed: u64) -> Result<SimConfig> {
        let curve = match &self.curve_csv {
            Some(p) => BatteryModel::load_curve_csv(p)?,
            None => LI_ION_CURVE.to_vec(),
        };
        let battery = BatteryModel::new(self.capacity_mah, self.nominal_voltage, curve)?;
        let ladder = RateLadder::from_modes(&self.ladder_intervals_s, &self.modes)?;
        if !(0.0..1.0).contains(&self.e_buf_fraction) {
            return Err(Error::invalid("e_buf_fraction", "must lie in [0, 1)"));
        }
        let eico = EicoConfig {
            d_max: self.d_max,
            e_buf_j: self
                .e_buf_j
                .unwrap_or(self.e_buf_fraction * battery.capacity_energy_j()),
            charge_fraction: self.charge_fraction,
            up_ratio: self.up_ratio,
            down_ratio: self.down_ratio,
            ladder,
        };
        let harvest = match &self.harvest {
            HarvestSpec::Synthetic {
                insolation_kwh_m2,
                daylight_hours,
                cloud_depth,
            } => HarvestInput::Synthetic {
                days: insolation_kwh_m2
                    .iter()
                    .map(|&v| DailyInsolation::new(v, ""))
                    .collect::<Result<_>>()?,
                daylight_hours: *daylight_hours,
                cloud_depth: *cloud_depth,
            },
            HarvestSpec::TraceCsv(p) => HarvestInput::Trace(load_trace(p)?),
        };
        let cfg = SimConfig {
            cell: self.cell,
            battery,
            initial_soc: self.initial_soc,
            eico,
            thresholds: self.thresholds,
            modes: self.modes,
            duration_days: self.duration_days,
            harvest,
            sensor: resolve_signal(&self.sensor)?,
            seed,
            control: self
                .fixed_interval_s
                .map_or(Control::Adaptive, Control::Fixed),
            initial_interval_s: self.initial_interval_s,
            node_address: self.node_address,
            sunset: self.sunset,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl IsaSpec {
    pub fn build(&self, seed: u64) -> Result<IsaDemoConfig> {
        Ok(IsaDemoConfig {
            signal: resolve_signal(&self.signal)?,
            duration_s: self.duration_s,
            interval_s: self.interval_s,
            baseline_interval_s: self.baseline_interval_s,
            thresholds: self.thresholds,
            seed,
        })
    }
}

impl NamedScenario {
    pub fn from_preset(name: &str, seed: Option<u64>) -> Result<Self> {
        let seed = seed.unwrap_or(DEFAULT_SEED);
        Ok(Self {
            name: name.to_string(),
            seed,
            spec: preset(name, seed)?,
        })
    }

    /// Reads a scenario file. `seed_override` wins over the file's seed.
    pub fn from_file(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ScenarioFile =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let name = file
            .preset
            .clone()
            .unwrap_or_else(|| PRESETS[0].to_string());
        let mut s = Self::from_preset(&name, seed_override.or(file.seed))?;
        file.apply(&mut s.spec, base)?;
        Ok(s)
    }

    pub fn build(&self) -> Result<Scenario> {
        match &self.spec {
            ScenarioSpec::Node(n) => Ok(Scenario::Node(Box::new(n.build(self.seed)?))),
            ScenarioSpec::Isa(i) => Ok(Scenario::Isa(i.build(self.seed)?)),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    preset: Option<String>,
    seed: Option<u64>,
    duration_days: Option<u32>,
    initial_soc: Option<f64>,
    initial_interval_s: Option<u32>,
    fixed_interval_s: Option<u32>,
    node_address: Option<u16>,
    cell: Option<CellFile>,
    battery: Option<BatteryFile>,
    eico: Option<EicoFile>,
    harvest: Option<HarvestFile>,
    sensor: Option<SensorFile>,
    thresholds: Option<ThresholdFile>,
    isa: Option<IsaFile>,
    sunset: Option<SunsetFile>,
    modes: Option<PowerModeTable>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellFile {
    area_cm2: Option<f64>,
    cell_efficiency: Option<f64>,
    harvester_efficiency: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatteryFile {
    capacity_mah: Option<f64>,
    nominal_voltage: Option<f64>,
    curve_csv: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EicoFile {
    d_max: Option<u32>,
    e_buf_j: Option<f64>,
    e_buf_fraction: Option<f64>,
    charge_fraction: Option<f64>,
    up_ratio: Option<f64>,
    down_ratio: Option<f64>,
    ladder_intervals_s: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarvestFile {
    insolation_kwh_m2: Option<Vec<f64>>,
    daylight_hours: Option<f64>,
    cloud_depth: Option<f64>,
    trace_csv: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorFile {
    signal: Option<String>,
    history_csv: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdFile {
    temperature: Option<f64>,
    humidity: Option<f64>,
    lux: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IsaFile {
    duration_s: Option<u32>,
    interval_s: Option<u32>,
    baseline_interval_s: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SunsetFile {
    threshold_mw: Option<f64>,
    quiet_minutes: Option<u32>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn node_only(key: &str) -> Error {
    Error::Config(format!("`{key}` only applies to node scenarios"))
}

impl ScenarioFile {
    fn apply(self, spec: &mut ScenarioSpec, base: &Path) -> Result<()> {
        let rel = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let sensor = match self.sensor {
            Some(s) => match (s.signal, s.history_csv) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "give either sensor.signal or sensor.history_csv".into(),
                    ))
                }
                (Some(name), None) => Some(SensorSpec::Generator(signal_by_name(&name)?)),
                (None, Some(p)) => Some(SensorSpec::HistoryCsv(rel(p))),
                (None, None) => None,
            },
            None => None,
        };
        let apply_thresholds = |th: &mut AnomalyThresholds, f: Option<ThresholdFile>| {
            if let Some(f) = f {
                set(&mut th.relative.temperature, f.temperature);
                set(&mut th.relative.humidity, f.humidity);
                set(&mut th.relative.lux, f.lux);
            }
        };

        match spec {
            ScenarioSpec::Isa(isa) => {
                let node_keys = [
                    ("duration_days", self.duration_days.is_some()),
                    ("initial_soc", self.initial_soc.is_some()),
                    ("initial_interval_s", self.initial_interval_s.is_some()),
                    ("fixed_interval_s", self.fixed_interval_s.is_some()),
                    ("cell", self.cell.is_some()),
                    ("battery", self.battery.is_some()),
                    ("eico", self.eico.is_some()),
                    ("harvest", self.harvest.is_some()),
                    ("sunset", self.sunset.is_some()),
                    ("modes", self.modes.is_some()),
                ];
                if let Some((k, _)) = node_keys.iter().find(|(_, present)| *present) {
                    return Err(node_only(k));
                }
                set(&mut isa.signal, sensor);
                apply_thresholds(&mut isa.thresholds, self.thresholds);
                if let Some(f) = self.isa {
                    set(&mut isa.duration_s, f.duration_s);
                    set(&mut isa.interval_s, f.interval_s);
                    set(&mut isa.baseline_interval_s, f.baseline_interval_s);
                }
            }
            ScenarioSpec::Node(n) => {
                if self.isa.is_some() {
                    return Err(Error::Config("`isa` only applies to detector demos".into()));
                }
                set(&mut n.duration_days, self.duration_days);
                set(&mut n.initial_soc, self.initial_soc);
                if self.initial_interval_s.is_some() {
                    n.initial_interval_s = self.initial_interval_s;
                }
                if self.fixed_interval_s.is_some() {
                    n.fixed_interval_s = self.fixed_interval_s;
                }
                set(&mut n.node_address, self.node_address);
                if let Some(c) = self.cell {
                    set(&mut n.cell.area_cm2, c.area_cm2);
                    set(&mut n.cell.cell_efficiency, c.cell_efficiency);
                    set(&mut n.cell.harvester_efficiency, c.harvester_efficiency);
                }
                if let Some(b) = self.battery {
                    set(&mut n.capacity_mah, b.capacity_mah);
                    set(&mut n.nominal_voltage, b.nominal_voltage);
                    if let Some(p) = b.curve_csv {
                        n.curve_csv = Some(rel(p));
                    }
                }
                if let Some(e) = self.eico {
                    set(&mut n.d_max, e.d_max);
                    if e.e_buf_j.is_some() && e.e_buf_fraction.is_some() {
                        return Err(Error::Config(
                            "give either eico.e_buf_j or eico.e_buf_fraction".into(),
                        ));
                    }
                    if let Some(f) = e.e_buf_fraction {
                        n.e_buf_fraction = f;
                        n.e_buf_j = None;
                    }
                    if e.e_buf_j.is_some() {
                        n.e_buf_j = e.e_buf_j;
                    }
                    set(&mut n.charge_fraction, e.charge_fraction);
                    set(&mut n.up_ratio, e.up_ratio);
                    set(&mut n.down_ratio, e.down_ratio);
                    set(&mut n.ladder_intervals_s, e.ladder_intervals_s);
                }
                if let Some(h) = self.harvest {
                    if let Some(p) = h.trace_csv {
                        if h.insolation_kwh_m2.is_some()
                            || h.daylight_hours.is_some()
                            || h.cloud_depth.is_some()
                        {
                            return Err(Error::Config(
                                "harvest.trace_csv excludes the synthetic harvest keys".into(),
                            ));
                        }
                        n.harvest = HarvestSpec::TraceCsv(rel(p));
                    } else {
                        let (mut ins, mut daylight, mut depth) = match &n.harvest {
                            HarvestSpec::Synthetic {
                                insolation_kwh_m2,
                                daylight_hours,
                                cloud_depth,
                            } => (insolation_kwh_m2.clone(), *daylight_hours, *cloud_depth),
                            HarvestSpec::TraceCsv(_) => (Vec::new(), 12.0, 0.0),
                        };
                        set(&mut ins, h.insolation_kwh_m2);
                        set(&mut daylight, h.daylight_hours);
                        set(&mut depth, h.cloud_depth);
                        n.harvest = HarvestSpec::Synthetic {
                            insolation_kwh_m2: ins,
                            daylight_hours: daylight,
                            cloud_depth: depth,
                        };
                    }
                }
                set(&mut n.sensor, sensor);
                apply_thresholds(&mut n.thresholds, self.thresholds);
                if let Some(s) = self.sunset {
                    set(&mut n.sunset.threshold_mw, s.threshold_mw);
                    set(&mut n.sunset.quiet_minutes, s.quiet_minutes);
                }
                set(&mut n.modes, self.modes);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for name in PRESETS {
            let s = NamedScenario::from_preset(name, None).unwrap();
            s.build().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(NamedScenario::from_preset("july-mars", None).is_err());
    }

    #[test]
    fn seed_changes_weather() {
        let a = preset("december-indiana", 1).unwrap();
        let b = preset("december-indiana", 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, preset("december-indiana", 1).unwrap());
    }

    #[test]
    fn file_overlay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        std::fs::write(
            &path,
            r#"
preset = "june-indiana"
seed = 9
duration_days = 3
[eico]
e_buf_j = 500.0
up_ratio = 3.0
[harvest]
insolation_kwh_m2 = [6.0, 6.0, 6.0]
[thresholds]
humidity = 0.08
"#,
        )
        .unwrap();
        let s = NamedScenario::from_file(&path, None).unwrap();
        assert_eq!(s.seed, 9);
        let Scenario::Node(cfg) = s.build().unwrap() else {
            panic!()
        };
        assert_eq!(cfg.duration_days, 3);
        assert_eq!(cfg.eico.e_buf_j, 500.0);
        assert_eq!(cfg.eico.up_ratio, 3.0);
        assert_eq!(cfg.thresholds.relative.humidity, 0.08);
        assert_eq!(cfg.thresholds.relative.temperature, 0.05);
        assert_eq!(NamedScenario::from_file(&path, Some(4)).unwrap().seed, 4);
    }

    #[test]
    fn file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        for bad in [
            "preset = \"nope\"",
            "mystery_key = 1",
            "preset = \"fig7-anomaly-demo\"\nduration_days = 2",
            "[eico]\nd_max = 0",
            "[eico]\ne_buf_j = 1.0\ne_buf_fraction = 0.2",
            "[sensor]\nsignal = \"weird\"",
        ] {
            std::fs::write(&path, bad).unwrap();
            let r = NamedScenario::from_file(&path, None).and_then(|s| s.build());
            assert!(r.is_err(), "accepted: {bad}");
        }
    }
}
