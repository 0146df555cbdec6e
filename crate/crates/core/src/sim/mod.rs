//! Minute-tick node simulation coupling harvest, battery, rate control,
//! anomaly detection and the radio.

mod export;
mod isa_demo;
mod kernel;
mod modes;
mod perpetuity;
mod signals;

pub use export::{
    load_days, load_log, load_tx, read_rows, write_result, write_rows, TxRow, DAYS_FILE, LOG_FILE,
    TX_FILE,
};
pub use isa_demo::{run_isa_demo, IsaDemoConfig, IsaDemoResult};
pub use kernel::{
    energy_balance, relative_energy_balance, run, Control, DayRow, DecisionTrigger, HarvestInput,
    MinuteRow, SimConfig, SimResult, SunsetDetector, SunsetEvent, TxRecord, DAYLIGHT_THRESHOLD_MW,
    MINUTES_PER_DAY, REPLAN_AFTER_MIN,
};
pub use modes::PowerModeTable;
pub use perpetuity::{verify_perpetuity, PerpetuityCheck, PerpetuityReport};
pub use signals::{SensorSignal, SignalSource};
