//! CSV export and re-import of simulation results.
//!
//! * `log.csv`: one row per simulated minute ([`MinuteRow`])
//! * `days.csv`: one row per day ([`DayRow`]); sunset columns are empty on
//!   days without a detected sunset
//! * `tx.csv`: one row per transmitted sample ([`TxRow`]) with the packet
//!   as lowercase hex

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::kernel::{DayRow, MinuteRow, SimResult, TxRecord};
use crate::error::Result;
use crate::isa::TxReason;

pub const LOG_FILE: &str = "log.csv";
pub const DAYS_FILE: &str = "days.csv";
pub const TX_FILE: &str = "tx.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxRow {
    pub epoch_s: i64,
    pub reason: TxReason,
    pub interval_s: u32,
    pub temp_c: f64,
    pub rh_pct: f64,
    pub lux: f64,
    pub packet_hex: String,
}

impl From<&TxRecord> for TxRow {
    fn from(t: &TxRecord) -> Self {
        Self {
            epoch_s: t.sample.epoch,
            reason: t.reason,
            interval_s: t.interval_s,
            temp_c: t.sample.temperature,
            rh_pct: t.sample.humidity,
            lux: t.sample.lux,
            packet_hex: hex::encode(t.packet),
        }
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// Writes the three result tables into `dir`.
pub fn write_result(result: &SimResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_rows(&dir.join(LOG_FILE), &result.minutes)?;
    write_rows(&dir.join(DAYS_FILE), &result.days)?;
    write_rows(
        &dir.join(TX_FILE),
        result.transmissions.iter().map(TxRow::from),
    )?;
    Ok(())
}

pub fn load_log(path: &Path) -> Result<Vec<MinuteRow>> {
    read_rows(path)
}

pub fn load_days(path: &Path) -> Result<Vec<DayRow>> {
    read_rows(path)
}

pub fn load_tx(path: &Path) -> Result<Vec<TxRow>> {
    read_rows(path)
}
