//! End-to-end Monte Carlo link simulation and parameter sweeps.
//!
//! Frames are simulated in fixed-size batches. Each batch is one continuous
//! burst: a few junk bits, `FRAMES_PER_BATCH` back-to-back frames and the
//! next frame's preamble, sent through the modem and the channel and then
//! acquired and tracked by the correlator banks. A batch's randomness comes
//! only from its own derived seed, and batch results are integer counts
//! summed in batch order, so output does not depend on thread count.
//!
//! Error accounting uses the known frame positions, not the synchronizer:
//! - raw errors compare received and sent codeword bits at the true frame
//!   positions, before decoding;
//! - coded errors compare delivered payloads with the sent payloads, over
//!   frames the tracker delivered at their true position. A frame that
//!   fails decoding contributes its uncorrected systematic bytes;
//! - frames never delivered at their true position count as lost. They
//!   are frame errors but are left out of the coded bit count.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError, LinkBudget};
use crate::exec::Execution;
use crate::framing::{FrameKind, Framer};
use crate::modem;
use crate::rs;
use crate::seed;
use crate::sync::{self, CorrelatorBankConfig, Detector, SyncError, Tracker};

/// Frames per independently seeded burst.
pub const FRAMES_PER_BATCH: u64 = 32;

/// Upper bound on automatically chosen frame counts.
pub const MAX_DEFAULT_FRAMES: u64 = 200_000;

/// Expected error events targeted by [`default_frames`].
pub const TARGET_ERROR_EVENTS: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("frames must be at least 1")]
    NoFrames,
    #[error("bit offset {0} outside 0..8")]
    BitOffset(usize),
    #[error("sweep needs at least one value")]
    EmptySweep,
    #[error("sweep parameter {param} does not apply to the {channel} channel")]
    SweepMismatch {
        param: SweepParam,
        channel: &'static str,
    },
    #[error("bad sweep value {0} for gamma")]
    GammaValue(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Sync(#[from] SyncError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "model")]
pub enum ChannelModel {
    Noiseless,
    /// Complex AWGN at the given Eb/N0 (per channel bit unless the
    /// experiment says otherwise).
    Awgn {
        ebn0_db: f64,
    },
    /// Bit flips applied after demodulation.
    Bsc {
        p: f64,
    },
    /// AWGN at the Eb/N0 the link budget predicts for this distance.
    Distance {
        meters: f64,
        budget: LinkBudget,
    },
}

impl ChannelModel {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelModel::Noiseless => "noiseless",
            ChannelModel::Awgn { .. } => "awgn",
            ChannelModel::Bsc { .. } => "bsc",
            ChannelModel::Distance { .. } => "distance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Ebn0,
    P,
    Distance,
    Gamma,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Ebn0 => "ebn0",
            SweepParam::P => "p",
            SweepParam::Distance => "distance",
            SweepParam::Gamma => "gamma",
        })
    }
}

impl FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ebn0" | "snr" => Ok(SweepParam::Ebn0),
            "p" | "bsc" => Ok(SweepParam::P),
            "distance" => Ok(SweepParam::Distance),
            "gamma" => Ok(SweepParam::Gamma),
            _ => Err(format!("unknown sweep parameter {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub frame_kind: FrameKind,
    pub gamma: usize,
    pub channel: ChannelModel,
    pub frames: u64,
    pub master_seed: u64,
    /// Quote AWGN Eb/N0 per payload bit instead of per channel bit.
    pub ebn0_per_info_bit: bool,
    /// Junk bits ahead of the first frame of every batch; random in 0..8
    /// when unset.
    pub bit_offset: Option<usize>,
    pub execution: Execution,
    pub sweep: Option<Sweep>,
}

impl ExperimentConfig {
    pub fn new(
        frame_kind: FrameKind,
        channel: ChannelModel,
        frames: u64,
        master_seed: u64,
    ) -> Self {
        ExperimentConfig {
            frame_kind,
            gamma: frame_kind.default_gamma(),
            channel,
            frames,
            master_seed,
            ebn0_per_info_bit: false,
            bit_offset: None,
            execution: Execution::default(),
            sweep: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.frames == 0 {
            return Err(HarnessError::NoFrames);
        }
        if let Some(m) = self.bit_offset {
            if m >= 8 {
                return Err(HarnessError::BitOffset(m));
            }
        }
        CorrelatorBankConfig::new(self.frame_kind, self.gamma)?;
        match self.channel {
            ChannelModel::Bsc { p } if !(0.0..=1.0).contains(&p) => {
                return Err(ChannelError::Probability(p).into())
            }
            ChannelModel::Awgn { ebn0_db } if ebn0_db.is_nan() => {
                return Err(ChannelError::Budget("Eb/N0 is NaN").into())
            }
            ChannelModel::Distance { meters, budget } => {
                channel::snr_at_distance(&budget, meters)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Channel bit error probability the theory predicts for this setup.
    pub fn theory_raw_ber(&self) -> Result<f64, HarnessError> {
        Ok(match self.channel {
            ChannelModel::Noiseless => 0.0,
            ChannelModel::Awgn { ebn0_db } => {
                channel::dbpsk_ber_theory(ebn0_db + 10.0 * self.awgn_rate().log10())
            }
            ChannelModel::Bsc { p } => p,
            ChannelModel::Distance { meters, budget } => {
                channel::dbpsk_ber_theory(channel::snr_at_distance(&budget, meters)?)
            }
        })
    }

    fn awgn_rate(&self) -> f64 {
        if self.ebn0_per_info_bit {
            self.frame_kind.code_rate()
        } else {
            1.0
        }
    }

    /// Per-dimension noise sigma for the modem, or `None` for bit-level
    /// channels.
    fn noise_sigma(&self) -> Result<Option<f64>, HarnessError> {
        Ok(match self.channel {
            ChannelModel::Noiseless => Some(0.0),
            ChannelModel::Awgn { ebn0_db } => Some(channel::noise_sigma(ebn0_db, self.awgn_rate())),
            ChannelModel::Distance { meters, budget } => Some(channel::noise_sigma(
                channel::snr_at_distance(&budget, meters)?,
                1.0,
            )),
            ChannelModel::Bsc { .. } => None,
        })
    }

    /// Copy of this config with one sweep value applied.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self, HarnessError> {
        let mut c = self.clone();
        c.sweep = None;
        let mismatch = || HarnessError::SweepMismatch {
            param,
            channel: self.channel.name(),
        };
        match (param, &mut c.channel) {
            (SweepParam::Gamma, _) => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(HarnessError::GammaValue(value));
                }
                c.gamma = value as usize;
            }
            (SweepParam::Ebn0, ChannelModel::Awgn { ebn0_db }) => *ebn0_db = value,
            (SweepParam::P, ChannelModel::Bsc { p }) => *p = value,
            (SweepParam::Distance, ChannelModel::Distance { meters, .. }) => *meters = value,
            _ => return Err(mismatch()),
        }
        Ok(c)
    }
}

/// Smallest frame count giving about [`TARGET_ERROR_EVENTS`] raw bit errors
/// at `target_ber`, capped at [`MAX_DEFAULT_FRAMES`].
pub fn default_frames(kind: FrameKind, target_ber: f64) -> u64 {
    let bits_per_frame = (kind.codewords() * rs::N * 8) as f64;
    if target_ber.is_nan() || target_ber <= 0.0 {
        return 100;
    }
    let frames = (TARGET_ERROR_EVENTS / target_ber / bits_per_frame).ceil();
    if frames >= MAX_DEFAULT_FRAMES as f64 {
        MAX_DEFAULT_FRAMES
    } else {
        (frames as u64).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkReport {
    pub raw_bit_errors: u64,
    pub raw_bits: u64,
    pub coded_bit_errors: u64,
    pub coded_bits: u64,
    pub frames: u64,
    pub frame_errors: u64,
    pub frames_lost: u64,
    /// Frames the tracker delivered at a position that is not a frame start.
    pub misaligned_frames: u64,
    pub sync_losses: u64,
    pub corrected_bytes_total: u64,
    pub master_seed: u64,
}

impl LinkReport {
    pub fn raw_ber(&self) -> f64 {
        ratio(self.raw_bit_errors, self.raw_bits)
    }

    pub fn coded_ber(&self) -> f64 {
        ratio(self.coded_bit_errors, self.coded_bits)
    }

    pub fn frame_error_rate(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub const CSV_HEADER: &'static str = "raw_bit_errors,raw_bits,raw_ber,coded_bit_errors,coded_bits,coded_ber,frames,frame_errors,fer,frames_lost,misaligned_frames,sync_losses,corrected_bytes_total,master_seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6e},{},{},{:.6e},{},{},{:.6e},{},{},{},{},{}",
            self.raw_bit_errors,
            self.raw_bits,
            self.raw_ber(),
            self.coded_bit_errors,
            self.coded_bits,
            self.coded_ber(),
            self.frames,
            self.frame_errors,
            self.frame_error_rate(),
            self.frames_lost,
            self.misaligned_frames,
            self.sync_losses,
            self.corrected_bytes_total,
            self.master_seed
        )
    }

    fn merge(&mut self, o: &LinkReport) {
        self.raw_bit_errors += o.raw_bit_errors;
        self.raw_bits += o.raw_bits;
        self.coded_bit_errors += o.coded_bit_errors;
        self.coded_bits += o.coded_bits;
        self.frames += o.frames;
        self.frame_errors += o.frame_errors;
        self.frames_lost += o.frames_lost;
        self.misaligned_frames += o.misaligned_frames;
        self.sync_losses += o.sync_losses;
        self.corrected_bytes_total += o.corrected_bytes_total;
    }

    /// Accounting identities that must hold for any run. Returns a
    /// description of each one that fails.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.raw_bit_errors > self.raw_bits {
            v.push(format!(
                "raw errors {} exceed raw bits {}",
                self.raw_bit_errors, self.raw_bits
            ));
        }
        if self.coded_bit_errors > self.coded_bits {
            v.push(format!(
                "coded errors {} exceed coded bits {}",
                self.coded_bit_errors, self.coded_bits
            ));
        }
        if self.frame_errors > self.frames || self.frames_lost > self.frame_errors {
            v.push(format!(
                "frame counts inconsistent: {} errors, {} lost, {} frames",
                self.frame_errors, self.frames_lost, self.frames
            ));
        }
        v
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn bit_diff(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x ^ y).count_ones() as u64)
        .sum()
}

struct BatchContext<'a> {
    cfg: &'a ExperimentConfig,
    framer: Framer,
    detector: Detector,
    sigma: Option<f64>,
}

impl BatchContext<'_> {
    fn run(&self, batch: u64, count: u64) -> LinkReport {
        let cfg = self.cfg;
        let kind = cfg.frame_kind;
        let frame_bits = kind.frame_bits();
        let mut rng = seed::rng(seed::derive(cfg.master_seed, batch));
        let offset = cfg.bit_offset.unwrap_or_else(|| rng.random_range(0..8));

        let count = count as usize;
        let mut payloads = Vec::with_capacity(count);
        let mut tx_bits: Vec<u8> = (0..offset).map(|_| rng.random_range(0..2)).collect();
        tx_bits.reserve(count * frame_bits + kind.preamble_bits() + 8);
        for _ in 0..count {
            let payload: Vec<u8> = (0..kind.payload_bytes()).map(|_| rng.random()).collect();
            let frame = self.framer.build(&payload).expect("payload sized by kind");
            modem::serialize_into(frame.as_bytes(), &mut tx_bits);
            payloads.push(payload);
        }
        // Trailing preamble plus filler so every bit shift of the last span fits.
        modem::serialize_into(&self.framer.preamble().to_bytes(), &mut tx_bits);
        tx_bits.extend((0..8).map(|_| rng.random_range(0..2u8)));

        let rx_bits = match (self.sigma, cfg.channel) {
            (Some(sigma), _) => {
                let mut symbols = modem::modulate(&tx_bits);
                channel::add_noise(&mut symbols, sigma, &mut rng);
                modem::diff_demod(&symbols)
            }
            (None, ChannelModel::Bsc { p }) => {
                let mut out = vec![0u8; tx_bits.len()];
                channel::bsc_into(&tx_bits, p, &mut rng, &mut out);
                out
            }
            (None, _) => unreachable!("only bit-level channels lack a noise sigma"),
        };

        let mut rep = LinkReport {
            frames: count as u64,
            ..LinkReport::default()
        };

        for i in 0..count {
            let start = offset + i * frame_bits;
            for cw in 0..kind.codewords() {
                let r = kind.codeword_range(cw);
                let (a, b) = (start + r.start * 8, start + r.end * 8);
                rep.raw_bit_errors += tx_bits[a..b]
                    .iter()
                    .zip(&rx_bits[a..b])
                    .filter(|(x, y)| x != y)
                    .count() as u64;
                rep.raw_bits += (rs::N * 8) as u64;
            }
        }

        let mut delivered = vec![false; count];
        let mut tracker = Tracker::new(&self.detector, &rx_bits);
        for tf in tracker.by_ref() {
            let rel = tf.start_bit.wrapping_sub(offset);
            let index = rel / frame_bits;
            if tf.start_bit < offset || rel % frame_bits != 0 || index >= count {
                rep.misaligned_frames += 1;
                continue;
            }
            delivered[index] = true;
            let bytes = modem::deserialize(&rx_bits[tf.start_bit..tf.start_bit + frame_bits], 0)
                .expect("whole frame");
            let truth = &payloads[index];
            rep.coded_bits += (truth.len() * 8) as u64;
            match self.framer.parse(&bytes) {
                Ok((payload, corrected)) => {
                    rep.corrected_bytes_total += corrected as u64;
                    let errs = bit_diff(&payload, truth);
                    rep.coded_bit_errors += errs;
                    if errs > 0 {
                        rep.frame_errors += 1;
                    }
                }
                Err(_) => {
                    rep.coded_bit_errors += bit_diff(&self.framer.systematic_bytes(&bytes), truth);
                    rep.frame_errors += 1;
                }
            }
        }
        rep.sync_losses = tracker.losses() as u64;
        let lost = delivered.iter().filter(|d| !**d).count() as u64;
        rep.frames_lost = lost;
        rep.frame_errors += lost;
        rep
    }
}

/// Simulate `cfg.frames` frames through the full transmit chain, channel
/// and receive chain.
pub fn run_link(cfg: &ExperimentConfig) -> Result<LinkReport, HarnessError> {
    cfg.validate()?;
    let ctx = BatchContext {
        cfg,
        framer: Framer::new(cfg.frame_kind),
        detector: Detector::new(CorrelatorBankConfig::new(cfg.frame_kind, cfg.gamma)?),
        sigma: cfg.noise_sigma()?,
    };
    let batches = cfg.frames.div_ceil(FRAMES_PER_BATCH);
    let parts = cfg.execution.map_indices(batches, |b| {
        let count = FRAMES_PER_BATCH.min(cfg.frames - b * FRAMES_PER_BATCH);
        ctx.run(b, count)
    });
    let mut total = LinkReport {
        master_seed: cfg.master_seed,
        ..LinkReport::default()
    };
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub report: LinkReport,
    pub theory_raw_ber: f64,
    pub p_miss: f64,
    pub p_false_single: f64,
}

pub const SWEEP_CSV_HEADER: &str =
    "parameter,raw_ber,coded_ber,fer,sync_losses,theory_raw_ber,p_miss,p_false_single";

/// One [`run_link`] per sweep value, seeded from the master seed and the
/// value's index.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, HarnessError> {
    let sw = cfg.sweep.as_ref().ok_or(HarnessError::EmptySweep)?;
    if sw.values.is_empty() {
        return Err(HarnessError::EmptySweep);
    }
    let indexed: Vec<(usize, f64)> = sw.values.iter().copied().enumerate().collect();
    cfg.execution
        .map_slice(&indexed, |&(i, v)| {
            let mut point = cfg.with_param(sw.param, v)?;
            point.master_seed = seed::derive(cfg.master_seed, i as u64);
            let report = run_link(&point)?;
            let theory = point.theory_raw_ber()?;
            let n = point.frame_kind.preamble_bits();
            let probs = sync::SyncProbabilities::new(n, point.gamma, theory.clamp(0.0, 1.0))?;
            Ok(SweepRow {
                parameter: v,
                report,
                theory_raw_ber: theory,
                p_miss: probs.p_miss,
                p_false_single: probs.p_false_single,
            })
        })
        .into_iter()
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6e},{:.6e},{:.6e},{},{:.6e},{:.6e},{:.6e}",
            r.parameter,
            r.report.raw_ber(),
            r.report.coded_ber(),
            r.report.frame_error_rate(),
            r.report.sync_losses,
            r.theory_raw_ber,
            r.p_miss,
            r.p_false_single
        );
    }
    out
}
