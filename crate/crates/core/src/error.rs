use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{quantity} {value} outside [{min}, {max}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{path}: row {row}: {reason}")]
    Parse {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Packet(#[from] crate::radio::PacketError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Reads a CSV with a fixed header, handing each record (with its 1-based
/// data row number) to `row_fn`.
pub(crate) fn read_csv_rows<T>(
    path: &std::path::Path,
    expected_header: &[&str],
    mut row_fn: impl FnMut(usize, &csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != expected_header {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: expected_header.join(","),
            found: found.join(","),
        });
    }
    let mut out = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row,
            reason: e.to_string(),
        })?;
        let value = row_fn(row, &record).map_err(|reason| Error::Parse {
            path: path.to_path_buf(),
            row,
            reason,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub(crate) fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> std::result::Result<T, String> {
    let raw = record
        .get(idx)
        .ok_or_else(|| format!("missing column `{name}`"))?;
    raw.parse::<T>()
        .map_err(|_| format!("cannot parse `{raw}` as {name}"))
}
