//! Sub-GHz radio: 22-byte packet codec and the analytical energy toolbox
//! (thermodynamic floor, link budget, duty-cycled communication energy).

mod duty;
mod link;
mod packet;

pub use duty::{
    average_mode_energy, duty_cycle_energy, info_loss, tradeoff_table, DutyCycleParams, TradeoffRow,
};
pub use link::{
    dbm_to_watts, fspl_db, landauer_limit, link_budget, min_tx_energy_per_bit, required_tx_dbm,
    LinkBudgetReport, LinkParams, BOLTZMANN, SPEED_OF_LIGHT,
};
pub use packet::{
    crc16_ccitt_false, decode_lux, describe_layout, encode_lux, PacketError, PacketMeta, TxPacket,
    HEADER_LEN, PACKET_LEN, PAYLOAD_LEN, SYNC_WORD,
};
