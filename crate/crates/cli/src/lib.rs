//! Command implementations behind the `eico-sim` binary.

mod report;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eico_core::isa::{
    calibrate_thresholds, load_history, reconstruct_zoh, SensorSample, Transmission, TxReason,
};
use eico_core::radio::{
    describe_layout, link_budget, tradeoff_table, DutyCycleParams, LinkBudgetReport, LinkParams,
    PacketMeta, TradeoffRow, TxPacket,
};
use eico_core::scenario::{NamedScenario, Scenario, PRESETS};
use eico_core::sim::{
    run, run_isa_demo, verify_perpetuity, write_result, write_rows, IsaDemoResult, PowerModeTable,
    SimResult, TxRow, TX_FILE,
};
use serde::Serialize;

pub use report::{isa_summary, linkbudget_table, node_summary, tradeoff_csv};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DIED: u8 = 2;

pub const SUMMARY_FILE: &str = "summary.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const TRADEOFF_FILE: &str = "tradeoff.csv";
pub const THRESHOLDS_FILE: &str = "thresholds.toml";

#[derive(Debug, Parser)]
#[command(
    name = "eico-sim",
    version,
    about = "Energy-harvesting sensor node simulator"
)]
pub struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write log/days/tx CSVs plus a summary.
    Simulate {
        /// Named preset; ignored when --config is given.
        #[arg(long)]
        preset: Option<String>,
        /// List the presets and exit.
        #[arg(long)]
        list: bool,
    },
    /// Derive relative anomaly thresholds from a sensor history CSV.
    Calibrate {
        history: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Minimum transmit power and energy per bit for a link.
    Linkbudget(LinkArgs),
    /// Encode or decode a 22-byte radio packet.
    Packet {
        /// Print the byte layout.
        #[arg(long)]
        describe: bool,
        #[command(subcommand)]
        action: Option<PacketAction>,
    },
    /// Duty-cycle energy and information loss against the transmit interval.
    Tradeoff {
        /// Transmit intervals in seconds; the first row is the baseline.
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0])]
        intervals: Vec<f64>,
        /// Radio on/off transient per switch.
        #[arg(long, default_value_t = 0.0)]
        t_tran_s: f64,
    },
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long, default_value_t = 916.0)]
    pub freq_mhz: f64,
    #[arg(long, default_value_t = 10.0)]
    pub distance_m: f64,
    #[arg(long, default_value_t = 2.0)]
    pub path_exponent: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub tx_gain_db: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub rx_gain_db: f64,
    #[arg(long, default_value_t = -120.0, allow_hyphen_values = true)]
    pub sensitivity_dbm: f64,
    #[arg(long, default_value_t = 5000.0)]
    pub rate_bps: f64,
    #[arg(long, default_value_t = 298.0)]
    pub temperature_k: f64,
}

impl LinkArgs {
    pub fn params(&self) -> LinkParams {
        LinkParams {
            frequency_hz: self.freq_mhz * 1e6,
            distance_m: self.distance_m,
            path_exponent: self.path_exponent,
            tx_gain_db: self.tx_gain_db,
            rx_gain_db: self.rx_gain_db,
            rx_sensitivity_dbm: self.sensitivity_dbm,
            data_rate_bps: self.rate_bps,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum PacketAction {
    Encode {
        #[arg(long, default_value_t = 1)]
        address: u16,
        #[arg(long, allow_hyphen_values = true)]
        temp: f64,
        #[arg(long)]
        rh: f64,
        #[arg(long)]
        lux: f64,
        #[arg(long)]
        epoch: i64,
        #[arg(long)]
        anomaly: bool,
        #[arg(long, default_value_t = 0)]
        rung: u8,
        #[arg(long, default_value_t = 0)]
        power_uw: u32,
    },
    Decode {
        hex: String,
    },
}

/// Outcome of `simulate`.
#[derive(Debug)]
pub enum SimOutcome {
    Node {
        result: Box<SimResult>,
        summary: String,
    },
    Isa {
        result: Box<IsaDemoResult>,
        summary: String,
    },
}

impl SimOutcome {
    pub fn summary(&self) -> &str {
        match self {
            SimOutcome::Node { summary, .. } | SimOutcome::Isa { summary, .. } => summary,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            SimOutcome::Node { result, .. } if !result.alive() => EXIT_DIED,
            _ => EXIT_OK,
        }
    }
}

pub fn load_scenario(
    config: Option<&Path>,
    preset: Option<&str>,
    seed: Option<u64>,
) -> Result<NamedScenario> {
    let s = match (config, preset) {
        (Some(path), _) => NamedScenario::from_file(path, seed)?,
        (None, Some(name)) => NamedScenario::from_preset(name, seed)?,
        (None, None) => bail!(
            "give --preset <name> or --config <file>; presets: {}",
            PRESETS.join(", ")
        ),
    };
    Ok(s)
}

#[derive(Serialize)]
struct TraceRow {
    epoch_s: i64,
    temp_c: f64,
    rh_pct: f64,
    lux: f64,
    temp_rec_c: f64,
    rh_rec_pct: f64,
    lux_rec: f64,
}

fn demo_tx_row(t: &Transmission, address: u16) -> Result<TxRow> {
    let meta = PacketMeta {
        address,
        anomaly: t.reason == TxReason::Anomaly,
        rung: 0,
        avail_power_uw: 0,
    };
    let packet = TxPacket::from_sample(&t.sample, meta)?.encode();
    Ok(TxRow {
        epoch_s: t.sample.epoch,
        reason: t.reason,
        interval_s: t.interval_s,
        temp_c: t.sample.temperature,
        rh_pct: t.sample.humidity,
        lux: t.sample.lux,
        packet_hex: hex::encode(packet),
    })
}

/// Runs the scenario and writes its tables and `summary.txt` into `out`.
pub fn simulate(scenario: &NamedScenario, out: &Path) -> Result<SimOutcome> {
    let built = scenario.build()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let outcome = match built {
        Scenario::Node(cfg) => {
            let result = run(&cfg)?;
            write_result(&result, out)?;
            let perpetuity = verify_perpetuity(&result, &cfg);
            let summary = node_summary(scenario, &cfg, &result, &perpetuity);
            SimOutcome::Node {
                result: Box::new(result),
                summary,
            }
        }
        Scenario::Isa(cfg) => {
            let result = run_isa_demo(&cfg)?;
            let rows = result
                .transmissions
                .iter()
                .map(|t| demo_tx_row(t, 1))
                .collect::<Result<Vec<_>>>()?;
            write_rows(&out.join(TX_FILE), rows)?;
            let sent: Vec<SensorSample> = result.transmissions.iter().map(|t| t.sample).collect();
            let timeline: Vec<i64> = result.samples.iter().map(|s| s.epoch).collect();
            let rec = reconstruct_zoh(&sent, &timeline)?;
            let trace = result.samples.iter().zip(&rec).map(|(s, r)| TraceRow {
                epoch_s: s.epoch,
                temp_c: s.temperature,
                rh_pct: s.humidity,
                lux: s.lux,
                temp_rec_c: r.temperature,
                rh_rec_pct: r.humidity,
                lux_rec: r.lux,
            });
            write_rows(&out.join(TRACE_FILE), trace)?;
            let summary = isa_summary(scenario, &cfg, &result);
            SimOutcome::Isa {
                result: Box::new(result),
                summary,
            }
        }
    };
    std::fs::write(out.join(SUMMARY_FILE), outcome.summary())?;
    Ok(outcome)
}

pub fn calibrate(history: &Path, k: usize) -> Result<String> {
    let samples = load_history(history)?;
    let cal = calibrate_thresholds(&samples, k)?;
    let th = cal.thresholds.relative;
    let mut text = format!(
        "[thresholds]\ntemperature = {}\nhumidity = {}\nlux = {}\n",
        th.temperature, th.humidity, th.lux
    );
    for ch in &cal.degenerate {
        text.push_str(&format!(
            "# {}: no separable change clusters, default kept\n",
            ch.name()
        ));
    }
    Ok(text)
}

pub fn linkbudget(args: &LinkArgs) -> Result<LinkBudgetReport> {
    Ok(link_budget(&args.params(), args.temperature_k)?)
}

pub fn tradeoff(intervals: &[f64], t_tran_s: f64) -> Result<Vec<TradeoffRow>> {
    let base = DutyCycleParams {
        t_tran_s,
        ..DutyCycleParams::from_modes(&PowerModeTable::default(), 1.0)
    };
    Ok(tradeoff_table(&base, intervals)?)
}

pub fn packet_text(describe: bool, action: Option<&PacketAction>) -> Result<String> {
    let mut out = String::new();
    if describe {
        out.push_str(&describe_layout());
    }
    match action {
        Some(PacketAction::Encode {
            address,
            temp,
            rh,
            lux,
            epoch,
            anomaly,
            rung,
            power_uw,
        }) => {
            let sample = SensorSample {
                epoch: *epoch,
                temperature: *temp,
                humidity: *rh,
                lux: *lux,
            };
            let meta = PacketMeta {
                address: *address,
                anomaly: *anomaly,
                rung: *rung,
                avail_power_uw: *power_uw,
            };
            out.push_str(&hex::encode(TxPacket::from_sample(&sample, meta)?.encode()));
            out.push('\n');
        }
        Some(PacketAction::Decode { hex }) => {
            let cleaned: String = hex
                .chars()
                .filter(|c| !c.is_whitespace() && *c != ':')
                .collect();
            let bytes = hex::decode(&cleaned).context("packet hex")?;
            let p = TxPacket::decode(&bytes)?;
            out.push_str(&format!(
                "address {}\nanomaly {}\nrung {}\ntemperature_c {:.2}\nhumidity_pct {:.2}\nlux {}\nepoch_s {}\navail_power_uw {}\n",
                p.address,
                p.anomaly,
                p.rung,
                p.temperature_c(),
                p.humidity_pct(),
                p.lux_value(),
                p.epoch,
                p.avail_power_uw
            ));
        }
        None if !describe => bail!("packet: give encode, decode or --describe"),
        None => {}
    }
    Ok(out)
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_or_print(out: Option<&Path>, file: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(file);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            emit(&format!("wrote {}\n", path.display()))?;
        }
        None => emit(text)?,
    }
    Ok(())
}

/// Executes one parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Simulate { preset, list } => {
            if *list {
                for p in PRESETS {
                    emit(&format!("{p}\n"))?;
                }
                return Ok(EXIT_OK);
            }
            let scenario = load_scenario(cli.config.as_deref(), preset.as_deref(), cli.seed)?;
            let out = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));
            let outcome = simulate(&scenario, &out)?;
            emit(outcome.summary())?;
            emit(&format!("results in {}\n", out.display()))?;
            Ok(outcome.exit_code())
        }
        Command::Calibrate { history, k } => {
            write_or_print(
                cli.out.as_deref(),
                THRESHOLDS_FILE,
                &calibrate(history, *k)?,
            )?;
            Ok(EXIT_OK)
        }
        Command::Linkbudget(args) => {
            emit(&linkbudget_table(
                &args.params(),
                &linkbudget(args)?,
                args.temperature_k,
            ))?;
            Ok(EXIT_OK)
        }
        Command::Packet { describe, action } => {
            emit(&packet_text(*describe, action.as_ref())?)?;
            Ok(EXIT_OK)
        }
        Command::Tradeoff {
            intervals,
            t_tran_s,
        } => {
            write_or_print(
                cli.out.as_deref(),
                TRADEOFF_FILE,
                &tradeoff_csv(&tradeoff(intervals, *t_tran_s)?),
            )?;
            Ok(EXIT_OK)
        }
    }
}
