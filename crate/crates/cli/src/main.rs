//! Command-line front end for the gigalink simulator.
//!
//! Exit status is 0 on success, 1 on a configuration or I/O error, 2 on a
//! command-line usage error and 3 when a run finishes but one of its
//! invariants does not hold.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gigalink::channel::LinkBudget;
use gigalink::elastic::{self, FifoConfig, FifoStats, WritePattern};
use gigalink::harness::{self, default_frames, Sweep, SweepParam};
use gigalink::sync::{self, TradeoffRow};
use gigalink::{ChannelModel, Execution, ExperimentConfig, FrameKind};

use config::{Settings, ValueList};

const VIOLATION_EXIT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gigalink",
    version,
    about = "Baseband link simulator for a 60 GHz DBPSK gigabit link"
)]
struct Cli {
    /// Settings file of `key = value` lines using the long flag names;
    /// flags on the command line override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one link configuration and print a one-row CSV report.
    Run(RunArgs),
    /// Simulate one configuration per parameter value and print CSV rows.
    Sweep(SweepArgs),
    /// Print the analytic miss / false-alarm table of the correlator banks.
    SyncTable(SyncTableArgs),
    /// Simulate the elastic FIFO between two clock domains.
    Fifo(FifoArgs),
}

#[derive(Args)]
struct LinkArgs {
    /// Master seed; every random draw of the run derives from it.
    #[arg(long)]
    seed: u64,
    /// Frame format: p32 or p64 [default: p32].
    #[arg(long)]
    frame_kind: Option<FrameKind>,
    /// Correlator threshold [default: 28 for p32, 49 for p64].
    #[arg(long)]
    gamma: Option<usize>,
    /// Channel model [default: awgn, or the model the sweep parameter needs].
    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,
    /// Eb/N0 in dB for the awgn channel [default: 8].
    #[arg(long, allow_negative_numbers = true)]
    ebn0_db: Option<f64>,
    /// Bit flip probability for the bsc channel [default: 1e-3].
    #[arg(long)]
    bsc_p: Option<f64>,
    /// Link distance in metres for the distance channel [default: 30].
    #[arg(long)]
    distance_m: Option<f64>,
    /// Transmit power [default: 0 dBm].
    #[arg(long, allow_negative_numbers = true)]
    tx_power_dbm: Option<f64>,
    /// Transmit antenna gain [default: 22.4 dBi].
    #[arg(long, allow_negative_numbers = true)]
    tx_gain_dbi: Option<f64>,
    /// Receive antenna gain [default: 22.4 dBi].
    #[arg(long, allow_negative_numbers = true)]
    rx_gain_dbi: Option<f64>,
    /// Carrier frequency [default: 60e9 Hz].
    #[arg(long)]
    carrier_hz: Option<f64>,
    /// Receiver noise bandwidth [default: 2e9 Hz].
    #[arg(long)]
    bandwidth_hz: Option<f64>,
    /// Receiver noise figure [default: 8 dB].
    #[arg(long)]
    noise_figure_db: Option<f64>,
    /// Additional path loss such as body blockage [default: 0 dB].
    #[arg(long)]
    extra_loss_db: Option<f64>,
    /// Frames per run. When absent, enough frames for 100 expected raw bit
    /// errors at the target BER, capped at 200000.
    #[arg(long)]
    frames: Option<u64>,
    /// BER used to size the default frame count [default: theoretical raw
    /// BER of the channel; the lowest nonzero one across sweep points].
    #[arg(long)]
    target_ber: Option<f64>,
    /// Quote awgn Eb/N0 per payload bit instead of per channel bit.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    ebn0_per_info_bit: Option<bool>,
    /// Junk bits ahead of each batch of frames, 0..=7 [default: random].
    #[arg(long)]
    bit_offset: Option<usize>,
    /// Run batches on one thread or across the rayon pool [default: parallel].
    #[arg(long, value_enum)]
    execution: Option<ExecutionArg>,
    /// Write the CSV here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    link: LinkArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    link: LinkArgs,
    /// Parameter to vary: ebn0, p, distance or gamma.
    #[arg(long)]
    param: Option<SweepParam>,
    /// Values as `a,b,c` or an inclusive range `start:stop:step`.
    #[arg(long, allow_negative_numbers = true)]
    values: Option<ValueList>,
}

#[derive(Args)]
struct SyncTableArgs {
    /// Frame format whose preamble length is used [default: p32].
    #[arg(long)]
    frame_kind: Option<FrameKind>,
    /// Channel bit error probability [default: 1e-4].
    #[arg(long)]
    p: Option<f64>,
    /// Thresholds to tabulate, as a list or range [default: every threshold].
    #[arg(long)]
    gammas: Option<ValueList>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FifoArgs {
    /// Clock and flow-control preset [default: tx].
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    capacity_bytes: Option<usize>,
    #[arg(long)]
    upper_threshold: Option<usize>,
    #[arg(long)]
    lower_threshold: Option<usize>,
    #[arg(long)]
    write_clock_hz: Option<f64>,
    #[arg(long)]
    read_clock_hz: Option<f64>,
    /// Write cycles between the stop signal and the writer pausing.
    #[arg(long)]
    resume_latency_cycles: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    flow_control: Option<bool>,
    /// Write pattern [default: continuous for tx, decoder for rx].
    #[arg(long, value_enum)]
    pattern: Option<PatternArg>,
    /// Active write cycles per period for the gated pattern.
    #[arg(long)]
    active: Option<u32>,
    /// Period in write cycles for the gated pattern.
    #[arg(long)]
    period: Option<u32>,
    /// Frame format that sizes the decoder pattern [default: p32].
    #[arg(long)]
    frame_kind: Option<FrameKind>,
    /// Read-clock cycles to simulate [default: 10000000].
    #[arg(long)]
    cycles: Option<u64>,
    /// Seed for the bursty pattern.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelArg {
    Noiseless,
    Awgn,
    Bsc,
    Distance,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExecutionArg {
    Sequential,
    Parallel,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Tx,
    Rx,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PatternArg {
    Continuous,
    Bursty,
    Gated,
    Decoder,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

macro_rules! from_str_via_value_enum {
    ($($t:ty),*) => {$(
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    )*};
}

from_str_via_value_enum!(ChannelArg, ExecutionArg, PresetArg, PatternArg, FormatArg);

impl From<ExecutionArg> for Execution {
    fn from(e: ExecutionArg) -> Self {
        match e {
            ExecutionArg::Sequential => Execution::Sequential,
            ExecutionArg::Parallel => Execution::Parallel,
        }
    }
}

/// Outcome of a subcommand that ran to completion.
struct Outcome {
    text: String,
    output: Option<PathBuf>,
    violations: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(out) => {
            if let Err(e) = emit(&out) {
                eprintln!("error: {e:#}");
                return ExitCode::FAILURE;
            }
            if out.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                for v in &out.violations {
                    eprintln!("invariant violated: {v}");
                }
                ExitCode::from(VIOLATION_EXIT)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn emit(out: &Outcome) -> Result<()> {
    match &out.output {
        Some(path) => {
            std::fs::write(path, &out.text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{}", out.text);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<Outcome> {
    let settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    match cli.command {
        Command::Run(a) => run(&a, &settings),
        Command::Sweep(a) => sweep(&a, &settings),
        Command::SyncTable(a) => sync_table(&a, &settings),
        Command::Fifo(a) => fifo(&a, &settings),
    }
}

fn run(a: &RunArgs, s: &Settings) -> Result<Outcome> {
    let cfg = experiment(&a.link, s, None)?;
    let report = harness::run_link(&cfg)?;
    Ok(Outcome {
        text: format!(
            "{}\n{}\n",
            gigalink::LinkReport::CSV_HEADER,
            report.csv_row()
        ),
        output: a.link.output.clone(),
        violations: report.violations(),
    })
}

fn sweep(a: &SweepArgs, s: &Settings) -> Result<Outcome> {
    let param = s
        .pick(a.param, "param")?
        .context("--param is required for a sweep")?;
    let values = s
        .pick(a.values.clone(), "values")?
        .context("--values is required for a sweep")?;
    let cfg = experiment(
        &a.link,
        s,
        Some(Sweep {
            param,
            values: values.0,
        }),
    )?;
    let rows = harness::sweep(&cfg)?;
    let violations = rows
        .iter()
        .flat_map(|r| {
            r.report
                .violations()
                .into_iter()
                .map(move |v| format!("{} = {}: {v}", param, r.parameter))
        })
        .collect();
    Ok(Outcome {
        text: harness::sweep_csv(&rows),
        output: a.link.output.clone(),
        violations,
    })
}

fn experiment(a: &LinkArgs, s: &Settings, sweep: Option<Sweep>) -> Result<ExperimentConfig> {
    let kind = s.pick_or(a.frame_kind, "frame-kind", FrameKind::P32)?;
    let default_channel = match sweep.as_ref().map(|sw| sw.param) {
        Some(SweepParam::P) => ChannelArg::Bsc,
        Some(SweepParam::Distance) => ChannelArg::Distance,
        _ => ChannelArg::Awgn,
    };
    let d = LinkBudget::default();
    let budget = LinkBudget {
        tx_power_dbm: s.pick_or(a.tx_power_dbm, "tx-power-dbm", d.tx_power_dbm)?,
        tx_gain_dbi: s.pick_or(a.tx_gain_dbi, "tx-gain-dbi", d.tx_gain_dbi)?,
        rx_gain_dbi: s.pick_or(a.rx_gain_dbi, "rx-gain-dbi", d.rx_gain_dbi)?,
        carrier_hz: s.pick_or(a.carrier_hz, "carrier-hz", d.carrier_hz)?,
        bandwidth_hz: s.pick_or(a.bandwidth_hz, "bandwidth-hz", d.bandwidth_hz)?,
        noise_figure_db: s.pick_or(a.noise_figure_db, "noise-figure-db", d.noise_figure_db)?,
        extra_loss_db: s.pick_or(a.extra_loss_db, "extra-loss-db", d.extra_loss_db)?,
    };
    let channel = match s.pick_or(a.channel, "channel", default_channel)? {
        ChannelArg::Noiseless => ChannelModel::Noiseless,
        ChannelArg::Awgn => ChannelModel::Awgn {
            ebn0_db: s.pick_or(a.ebn0_db, "ebn0-db", 8.0)?,
        },
        ChannelArg::Bsc => ChannelModel::Bsc {
            p: s.pick_or(a.bsc_p, "bsc-p", 1e-3)?,
        },
        ChannelArg::Distance => ChannelModel::Distance {
            meters: s.pick_or(a.distance_m, "distance-m", 30.0)?,
            budget,
        },
    };
    let mut cfg = ExperimentConfig::new(kind, channel, 1, a.seed);
    cfg.gamma = s.pick_or(a.gamma, "gamma", kind.default_gamma())?;
    cfg.ebn0_per_info_bit = s.pick_or(a.ebn0_per_info_bit, "ebn0-per-info-bit", false)?;
    cfg.bit_offset = s.pick(a.bit_offset, "bit-offset")?;
    cfg.execution = s
        .pick_or(a.execution, "execution", ExecutionArg::Parallel)?
        .into();
    cfg.sweep = sweep;
    cfg.frames = match s.pick(a.frames, "frames")? {
        Some(f) => f,
        None => {
            let target = match s.pick(a.target_ber, "target-ber")? {
                Some(t) => t,
                None => target_ber(&cfg)?,
            };
            default_frames(kind, target)
        }
    };
    cfg.validate()?;
    if let Some(sw) = &cfg.sweep {
        for &v in &sw.values {
            cfg.with_param(sw.param, v)?.validate()?;
        }
    }
    Ok(cfg)
}

/// Theoretical raw BER of the configuration; for a sweep, the lowest
/// nonzero value over its points.
fn target_ber(cfg: &ExperimentConfig) -> Result<f64> {
    let Some(sw) = &cfg.sweep else {
        return Ok(cfg.theory_raw_ber()?);
    };
    let mut lowest = f64::INFINITY;
    for &v in &sw.values {
        let t = cfg.with_param(sw.param, v)?.theory_raw_ber()?;
        if t > 0.0 {
            lowest = lowest.min(t);
        }
    }
    Ok(if lowest.is_finite() { lowest } else { 0.0 })
}

fn sync_table(a: &SyncTableArgs, s: &Settings) -> Result<Outcome> {
    let kind = s.pick_or(a.frame_kind, "frame-kind", FrameKind::P32)?;
    let p = s.pick_or(a.p, "p", 1e-4)?;
    let n = kind.preamble_bits();
    let gammas: Vec<usize> = match s.pick(a.gammas.clone(), "gammas")? {
        None => (0..=n).collect(),
        Some(list) => list
            .0
            .iter()
            .map(|&g| {
                if g < 0.0 || g.fract() != 0.0 {
                    bail!("threshold {g} is not a non-negative integer");
                }
                Ok(g as usize)
            })
            .collect::<Result<_>>()?,
    };
    let rows = sync::tradeoff_table(kind, p, gammas)?;
    Ok(Outcome {
        text: sync::tradeoff_csv(&rows),
        output: a.output.clone(),
        violations: table_violations(&rows),
    })
}

/// Probabilities must lie in [0, 1]; with rows in increasing threshold
/// order, misses may not decrease and false alarms may not increase.
fn table_violations(rows: &[TradeoffRow]) -> Vec<String> {
    let mut v = Vec::new();
    for r in rows {
        for (name, x) in [
            ("p_miss", r.p_miss),
            ("p_false_single", r.p_false_single),
            ("p_false_double", r.p_false_double),
        ] {
            if !(0.0..=1.0).contains(&x) {
                v.push(format!("gamma {}: {name} = {x} outside [0, 1]", r.gamma));
            }
        }
    }
    for w in rows.windows(2) {
        if w[1].gamma > w[0].gamma
            && (w[1].p_miss < w[0].p_miss || w[1].p_false_single > w[0].p_false_single)
        {
            v.push(format!(
                "not monotone between gamma {} and {}",
                w[0].gamma, w[1].gamma
            ));
        }
    }
    v
}

fn fifo(a: &FifoArgs, s: &Settings) -> Result<Outcome> {
    let preset = s.pick_or(a.preset, "preset", PresetArg::Tx)?;
    let base = match preset {
        PresetArg::Tx => FifoConfig::default(),
        PresetArg::Rx => FifoConfig::rx_side(),
    };
    let cfg = FifoConfig {
        capacity_bytes: s.pick_or(a.capacity_bytes, "capacity-bytes", base.capacity_bytes)?,
        upper_threshold: s.pick_or(a.upper_threshold, "upper-threshold", base.upper_threshold)?,
        lower_threshold: s.pick_or(a.lower_threshold, "lower-threshold", base.lower_threshold)?,
        write_clock_hz: s.pick_or(a.write_clock_hz, "write-clock-hz", base.write_clock_hz)?,
        read_clock_hz: s.pick_or(a.read_clock_hz, "read-clock-hz", base.read_clock_hz)?,
        resume_latency_cycles: s.pick_or(
            a.resume_latency_cycles,
            "resume-latency-cycles",
            base.resume_latency_cycles,
        )?,
        flow_control: s.pick_or(a.flow_control, "flow-control", base.flow_control)?,
    };
    let default_pattern = match preset {
        PresetArg::Tx => PatternArg::Continuous,
        PresetArg::Rx => PatternArg::Decoder,
    };
    let pattern = match s.pick_or(a.pattern, "pattern", default_pattern)? {
        PatternArg::Continuous => WritePattern::Continuous,
        PatternArg::Bursty => WritePattern::Bursty,
        PatternArg::Gated => WritePattern::Gated {
            active: s
                .pick(a.active, "active")?
                .context("--active is required for the gated pattern")?,
            period: s
                .pick(a.period, "period")?
                .context("--period is required for the gated pattern")?,
        },
        PatternArg::Decoder => {
            WritePattern::decoder_output(s.pick_or(a.frame_kind, "frame-kind", FrameKind::P32)?)
        }
    };
    let cycles = s.pick_or(a.cycles, "cycles", 10_000_000)?;
    let stats = elastic::simulate_fifo(&cfg, cycles, pattern, a.seed)?;
    let text = match s.pick_or(a.format, "format", FormatArg::Csv)? {
        FormatArg::Csv => format!("{}\n{}\n", FifoStats::CSV_HEADER, stats.csv_row()),
        FormatArg::Jsonl => format!("{}\n", stats.json_line()),
    };
    Ok(Outcome {
        text,
        output: a.output.clone(),
        violations: stats.violations(&cfg, &pattern),
    })
}
