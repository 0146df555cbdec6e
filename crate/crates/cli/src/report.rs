use std::fmt::Write;

use eico_core::isa::{Channel, PerChannel};
use eico_core::radio::{LinkBudgetReport, LinkParams, TradeoffRow};
use eico_core::scenario::NamedScenario;
use eico_core::sim::{
    relative_energy_balance, IsaDemoConfig, IsaDemoResult, PerpetuityReport, SimConfig, SimResult,
};

fn fmt_r(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn fidelity_line(p: &PerChannel<Option<f64>>) -> String {
    Channel::ALL
        .iter()
        .map(|&ch| format!("{} {}", ch.name(), fmt_r(p[ch])))
        .collect::<Vec<_>>()
        .join(", ")
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

pub fn node_summary(
    scenario: &NamedScenario,
    cfg: &SimConfig,
    r: &SimResult,
    perp: &PerpetuityReport,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} (seed {})", scenario.name, scenario.seed);
    let _ = writeln!(
        s,
        "battery {:.0} mAh ({:.1} J), reserve {:.2} J, d_max {} days, start {:.1} J at {} s",
        cfg.battery.capacity_mah,
        cfg.battery.capacity_energy_j(),
        cfg.eico.e_buf_j,
        cfg.eico.d_max,
        r.initial_e_batt_j,
        r.initial_interval_s
    );
    match r.died_at {
        Some(t) => {
            let _ = writeln!(
                s,
                "node died at t = {t} s ({:.2} days)",
                t as f64 / 86_400.0
            );
        }
        None => {
            let _ = writeln!(s, "node alive after {} days", r.days.len());
        }
    }

    let _ = writeln!(s, "\ndaily energy (J) and rates (s)");
    let _ = writeln!(
        s,
        "{:>4} {:>9} {:>9} {:>8} {:>9} {:>9} {:>6} {:>7} {:>7} {:>6} {:>6}",
        "day",
        "harvest",
        "consumed",
        "clipped",
        "batt_in",
        "batt_out",
        "floor",
        "fastest",
        "sunset",
        "tx",
        "anom"
    );
    for d in &r.days {
        let _ = writeln!(
            s,
            "{:>4} {:>9.1} {:>9.1} {:>8.1} {:>9.1} {:>9.1} {:>6} {:>7} {:>7} {:>6} {:>6}",
            d.day,
            d.e_harv_j,
            d.e_cons_j,
            d.e_clipped_j,
            d.e_batt_start_j,
            d.e_batt_end_j,
            d.min_interval_s,
            d.fastest_interval_s,
            opt(d.sunset_interval_s),
            d.tx_count,
            d.anomaly_count
        );
    }
    let worst = relative_energy_balance(r)
        .into_iter()
        .fold(0.0f64, f64::max);
    let _ = writeln!(s, "worst daily energy-balance residual {:.2e}", worst);

    let _ = writeln!(
        s,
        "\ntransmissions {} ({} anomaly), samples {}, compression {:.2}",
        r.transmissions.len(),
        r.anomaly_count(),
        r.samples_seen,
        r.compression_ratio()
    );
    let _ = writeln!(s, "fidelity (Pearson r) {}", fidelity_line(&r.fidelity));

    let _ = writeln!(
        s,
        "\nperpetuity over {} harvest-free days above {:.2} J: {}",
        perp.d_max,
        perp.e_buf_j,
        if perp.all_pass() { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(
        s,
        "{:>10} {:>9} {:>6} {:>8} {:>10} {:>10} {:>5}",
        "epoch_s", "e_batt", "floor", "reserve", "margin", "static", "ok"
    );
    for c in &perp.checks {
        let _ = writeln!(
            s,
            "{:>10} {:>9.1} {:>6} {:>8} {:>10.1} {:>10.1} {:>5}",
            c.epoch_s,
            c.e_batt_j,
            c.interval_s,
            c.reserve_interval_s,
            c.margin_j,
            c.static_margin_j,
            if c.pass { "yes" } else { "no" }
        );
    }
    s
}

pub fn isa_summary(scenario: &NamedScenario, cfg: &IsaDemoConfig, r: &IsaDemoResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} (seed {})", scenario.name, scenario.seed);
    let th = cfg.thresholds.relative;
    let _ = writeln!(
        s,
        "{} s at 1 Hz, periodic interval {} s, thresholds temperature {} humidity {} lux {}",
        cfg.duration_s, cfg.interval_s, th.temperature, th.humidity, th.lux
    );
    let _ = writeln!(
        s,
        "transmissions {} ({} anomaly, {} periodic)",
        r.transmissions.len(),
        r.anomaly_count,
        r.periodic_count
    );
    let _ = writeln!(
        s,
        "compression {:.3} against the sampled stream, {:.3} against a {} s device ({} packets)",
        r.metrics.compression_ratio,
        r.compression_vs_baseline,
        cfg.baseline_interval_s,
        r.baseline_tx
    );
    let _ = writeln!(
        s,
        "fidelity (Pearson r) {}",
        fidelity_line(&r.metrics.pearson)
    );
    s
}

pub fn linkbudget_table(p: &LinkParams, r: &LinkBudgetReport, temperature_k: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "link {:.1} MHz over {} m, n = {}, gains {} dB / {} dB, sensitivity {} dBm, {} bps",
        p.frequency_hz / 1e6,
        p.distance_m,
        p.path_exponent,
        p.tx_gain_db,
        p.rx_gain_db,
        p.rx_sensitivity_dbm,
        p.data_rate_bps
    );
    let _ = writeln!(s, "fspl_db             {:.2}", r.fspl_db);
    let _ = writeln!(s, "tx_dbm              {:.2}", r.tx_dbm);
    let _ = writeln!(s, "tx_w                {:.4e}", r.tx_w);
    let _ = writeln!(s, "j_per_bit           {:.4e}", r.j_per_bit);
    let _ = writeln!(
        s,
        "landauer_j_per_bit  {:.4e}  (T = {temperature_k} K)",
        r.landauer_j_per_bit
    );
    let _ = writeln!(s, "ratio               {:.4e}", r.ratio);
    s
}

pub fn tradeoff_csv(rows: &[TradeoffRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}
