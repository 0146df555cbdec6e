use crate::isa::SensorSample;

pub const PACKET_LEN: usize = 22;
pub const HEADER_LEN: usize = 6;
pub const PAYLOAD_LEN: u8 = 16;
pub const SYNC_WORD: u16 = 0xD391;
const CRC_OFFSET: usize = 20;
const RESERVED_MASK: u8 = 0b1110_0000;
const LUX_MANTISSA_MAX: u16 = 0x0FFF;
const LUX_EXPONENT_MAX: u16 = 0x0F;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PacketError {
    #[error("packet must be {PACKET_LEN} bytes, got {0}")]
    Length(usize),
    #[error("CRC mismatch: packet carries {found:#06x}, computed {computed:#06x}")]
    Crc { found: u16, computed: u16 },
    #[error("bad sync word {0:#06x}")]
    BadSync(u16),
    #[error("length byte is {0}, expected {PAYLOAD_LEN}")]
    PayloadLength(u8),
    #[error("reserved flag bits set in {0:#04x}")]
    Reserved(u8),
    #[error("{field} value {value} is outside the encodable range")]
    Range { field: &'static str, value: f64 },
}

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xorout.
pub fn crc16_ccitt_false(data: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &b in data {
        crc ^= u16::from(b) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
        }
    }
    crc
}

/// Header fields that don't come from the sensor reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PacketMeta {
    pub address: u16,
    pub anomaly: bool,
    /// Rate-ladder rung, 0..=15.
    pub rung: u8,
    pub avail_power_uw: u32,
}

/// Logical packet contents at wire resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxPacket {
    pub address: u16,
    pub anomaly: bool,
    pub rung: u8,
    /// 0.01 °C units
    pub temperature: i16,
    /// 0.01 %RH units
    pub humidity: u16,
    /// exponent in the top 4 bits, mantissa in the low 12
    pub lux: u16,
    pub epoch: u32,
    pub avail_power_uw: u32,
}

fn range(field: &'static str, value: f64) -> PacketError {
    PacketError::Range { field, value }
}

/// Smallest exponent whose rounded mantissa fits in 12 bits.
pub fn encode_lux(lux: f64) -> Result<u16, PacketError> {
    if !(lux >= 0.0 && lux.is_finite()) {
        return Err(range("lux", lux));
    }
    let base = lux / 0.01;
    for e in 0..=LUX_EXPONENT_MAX {
        let m = (base / f64::from(1u32 << e)).round();
        if m <= f64::from(LUX_MANTISSA_MAX) {
            return Ok((e << 12) | m as u16);
        }
    }
    Err(range("lux", lux))
}

pub fn decode_lux(code: u16) -> f64 {
    let e = code >> 12;
    let m = code & LUX_MANTISSA_MAX;
    f64::from(m) * 0.01 * f64::from(1u32 << e)
}

impl TxPacket {
    pub fn from_sample(sample: &SensorSample, meta: PacketMeta) -> Result<Self, PacketError> {
        let t = (sample.temperature * 100.0).round();
        if !(t >= f64::from(i16::MIN) && t <= f64::from(i16::MAX)) {
            return Err(range("temperature", sample.temperature));
        }
        let h = (sample.humidity * 100.0).round();
        if !(h >= 0.0 && h <= f64::from(u16::MAX)) {
            return Err(range("humidity", sample.humidity));
        }
        let epoch = u32::try_from(sample.epoch).map_err(|_| range("epoch", sample.epoch as f64))?;
        if meta.rung > 15 {
            return Err(range("rung", f64::from(meta.rung)));
        }
        Ok(Self {
            address: meta.address,
            anomaly: meta.anomaly,
            rung: meta.rung,
            temperature: t as i16,
            humidity: h as u16,
            lux: encode_lux(sample.lux)?,
            epoch,
            avail_power_uw: meta.avail_power_uw,
        })
    }

    pub fn flags(&self) -> u8 {
        u8::from(self.anomaly) | ((self.rung & 0x0F) << 1)
    }

    pub fn temperature_c(&self) -> f64 {
        f64::from(self.temperature) / 100.0
    }

    pub fn humidity_pct(&self) -> f64 {
        f64::from(self.humidity) / 100.0
    }

    pub fn lux_value(&self) -> f64 {
        decode_lux(self.lux)
    }

    pub fn to_sample(&self) -> SensorSample {
        SensorSample {
            epoch: i64::from(self.epoch),
            temperature: self.temperature_c(),
            humidity: self.humidity_pct(),
            lux: self.lux_value(),
        }
    }

    /// Big-endian wire image with trailing CRC.
    pub fn encode(&self) -> [u8; PACKET_LEN] {
        let mut b = [0u8; PACKET_LEN];
        b[0..2].copy_from_slice(&SYNC_WORD.to_be_bytes());
        b[2] = PAYLOAD_LEN;
        b[3..5].copy_from_slice(&self.address.to_be_bytes());
        b[5] = self.flags();
        b[6..8].copy_from_slice(&self.temperature.to_be_bytes());
        b[8..10].copy_from_slice(&self.humidity.to_be_bytes());
        b[10..12].copy_from_slice(&self.lux.to_be_bytes());
        b[12..16].copy_from_slice(&self.epoch.to_be_bytes());
        b[16..20].copy_from_slice(&self.avail_power_uw.to_be_bytes());
        let crc = crc16_ccitt_false(&b[..CRC_OFFSET]);
        b[CRC_OFFSET..].copy_from_slice(&crc.to_be_bytes());
        b
    }

    /// Parses a wire image. The CRC is checked before any field so every
    /// corruption surfaces as a CRC error.
    pub fn decode(bytes: &[u8]) -> Result<Self, PacketError> {
        let b: &[u8; PACKET_LEN] = bytes
            .try_into()
            .map_err(|_| PacketError::Length(bytes.len()))?;
        let be16 = |i: usize| u16::from_be_bytes([b[i], b[i + 1]]);
        let be32 = |i: usize| u32::from_be_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);

        let found = be16(CRC_OFFSET);
        let computed = crc16_ccitt_false(&b[..CRC_OFFSET]);
        if found != computed {
            return Err(PacketError::Crc { found, computed });
        }
        if be16(0) != SYNC_WORD {
            return Err(PacketError::BadSync(be16(0)));
        }
        if b[2] != PAYLOAD_LEN {
            return Err(PacketError::PayloadLength(b[2]));
        }
        let flags = b[5];
        if flags & RESERVED_MASK != 0 {
            return Err(PacketError::Reserved(flags));
        }
        Ok(Self {
            address: be16(3),
            anomaly: flags & 1 == 1,
            rung: (flags >> 1) & 0x0F,
            temperature: i16::from_be_bytes([b[6], b[7]]),
            humidity: be16(8),
            lux: be16(10),
            epoch: be32(12),
            avail_power_uw: be32(16),
        })
    }
}

/// Byte layout table, one line per field.
pub fn describe_layout() -> String {
    let rows: [(&str, &str, &str); 11] = [
        ("0-1", "sync", "0xD391"),
        ("2", "length", "payload length, always 16"),
        ("3-4", "node_address", "u16"),
        (
            "5",
            "flags",
            "bit0 anomaly(1)/periodic(0), bits1-4 rung, bits5-7 reserved 0",
        ),
        ("6-7", "temperature", "i16, 0.01 degC"),
        ("8-9", "humidity", "u16, 0.01 %RH"),
        (
            "10-11",
            "lux",
            "4-bit exponent e, 12-bit mantissa m: m * 0.01 * 2^e lux",
        ),
        ("12-15", "sample_epoch", "u32, s"),
        ("16-19", "avail_power", "u32, uW"),
        ("20-21", "crc", "CRC-16/CCITT-FALSE over bytes 0-19"),
        ("", "total", "22 bytes: 6 header + 16 payload, big-endian"),
    ];
    let mut out = format!("{:<7} {:<13} {}\n", "offset", "field", "encoding");
    for (off, name, enc) in rows {
        out.push_str(&format!("{off:<7} {name:<13} {enc}\n"));
    }
    out
}
