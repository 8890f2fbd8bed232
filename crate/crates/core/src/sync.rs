//! Byte/frame synchronization with two banks of eight correlators, and the
//! analytic miss-detection and false-alarm probabilities of that detector.
//!
//! Bank 1 looks at the preamble of the current frame and bank 2 at the
//! preamble of the next one, one frame length later. Each bank has one
//! correlator per bit offset inside a byte. A lock is declared at the first
//! byte position where the same offset clears the threshold in both banks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binomial;
use crate::channel;
use crate::exec::Execution;
use crate::framing::{gen_preamble, FrameKind, Preamble};
use crate::seed;

/// Correlators per bank, one per bit offset in a byte.
pub const CORRELATORS_PER_BANK: usize = 8;

/// Consecutive failed preamble checks after which a tracked lock is dropped.
pub const MAX_CONSECUTIVE_MISSES: u32 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("window has {actual} bits, preamble has {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("stream has {actual} bits, detection needs at least {needed}")]
    StreamTooShort { needed: usize, actual: usize },
    #[error("threshold {gamma} outside 0..={max}")]
    GammaOutOfRange { gamma: usize, max: usize },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
}

/// Number of positions where `window` and `preamble` agree.
pub fn correlate(window: &[u8], preamble: &[u8]) -> Result<usize, SyncError> {
    if window.len() != preamble.len() {
        return Err(SyncError::LengthMismatch {
            expected: preamble.len(),
            actual: window.len(),
        });
    }
    Ok(matches(window, preamble))
}

#[inline]
fn matches(window: &[u8], preamble: &[u8]) -> usize {
    window
        .iter()
        .zip(preamble)
        .filter(|(a, b)| (*a ^ *b) & 1 == 0)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelatorBankConfig {
    pub kind: FrameKind,
    pub gamma: usize,
}

impl CorrelatorBankConfig {
    pub fn new(kind: FrameKind, gamma: usize) -> Result<Self, SyncError> {
        if gamma > kind.preamble_bits() {
            return Err(SyncError::GammaOutOfRange {
                gamma,
                max: kind.preamble_bits(),
            });
        }
        Ok(CorrelatorBankConfig { kind, gamma })
    }

    pub fn span_bytes(&self) -> usize {
        self.kind.span_bytes()
    }

    /// Shortest stream [`detect`] accepts.
    pub fn min_stream_bits(&self) -> usize {
        self.span_bytes() * 8 + CORRELATORS_PER_BANK - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SyncResult {
    pub locked: bool,
    pub bit_offset: usize,
    pub frame_start_bit: usize,
    pub score_bank1: usize,
    pub score_bank2: usize,
}

/// Correlator banks for one frame kind and threshold.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: CorrelatorBankConfig,
    preamble: Preamble,
}

impl Detector {
    pub fn new(cfg: CorrelatorBankConfig) -> Self {
        Detector {
            preamble: gen_preamble(cfg.kind),
            cfg,
        }
    }

    pub fn config(&self) -> &CorrelatorBankConfig {
        &self.cfg
    }

    pub fn preamble(&self) -> &Preamble {
        &self.preamble
    }

    /// Score of the preamble correlator at bit `pos`, or `None` past the end.
    pub fn score_at(&self, stream: &[u8], pos: usize) -> Option<usize> {
        let n = self.preamble.len();
        stream
            .get(pos..pos + n)
            .map(|w| matches(w, self.preamble.bits()))
    }

    /// Scan byte positions from bit `from`; see [`detect`].
    pub fn acquire(&self, stream: &[u8], from: usize) -> SyncResult {
        let n = self.preamble.len();
        let frame_bits = self.cfg.kind.frame_bits();
        let gamma = self.cfg.gamma;
        let mut base = from;
        while base + CORRELATORS_PER_BANK - 1 + frame_bits + n <= stream.len() {
            for k in 0..CORRELATORS_PER_BANK {
                let s = base + k;
                let first = matches(&stream[s..s + n], self.preamble.bits());
                if first < gamma {
                    continue;
                }
                let second = matches(
                    &stream[s + frame_bits..s + frame_bits + n],
                    self.preamble.bits(),
                );
                if second >= gamma {
                    return SyncResult {
                        locked: true,
                        bit_offset: s % 8,
                        frame_start_bit: s,
                        score_bank1: first,
                        score_bank2: second,
                    };
                }
            }
            base += 8;
        }
        SyncResult::default()
    }
}

/// Slide byte by byte over `stream` and lock where the same bit offset fires
/// in both banks.
pub fn detect(stream: &[u8], cfg: &CorrelatorBankConfig) -> Result<SyncResult, SyncError> {
    let needed = cfg.min_stream_bits();
    if stream.len() < needed {
        return Err(SyncError::StreamTooShort {
            needed,
            actual: stream.len(),
        });
    }
    Ok(Detector::new(*cfg).acquire(stream, 0))
}

/// What the tracker reports for each frame it hands out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackedFrame {
    pub start_bit: usize,
    /// Set when the frame came from a fresh acquisition.
    pub acquired: bool,
    /// Correlation of the frame's own preamble.
    pub score: usize,
}

/// Acquisition followed by per-frame preamble verification.
///
/// Once locked, each following frame is expected one frame length later.
/// A frame whose preamble misses the threshold is still delivered, but after
/// [`MAX_CONSECUTIVE_MISSES`] misses in a row the lock is dropped and the
/// banks search again from that point.
pub struct Tracker<'a> {
    detector: &'a Detector,
    stream: &'a [u8],
    next: Option<usize>,
    search_from: usize,
    misses: u32,
    losses: usize,
}

impl<'a> Tracker<'a> {
    pub fn new(detector: &'a Detector, stream: &'a [u8]) -> Self {
        Tracker {
            detector,
            stream,
            next: None,
            search_from: 0,
            misses: 0,
            losses: 0,
        }
    }

    /// Number of times a held lock was dropped.
    pub fn losses(&self) -> usize {
        self.losses
    }

    fn frame_fits(&self, start: usize) -> bool {
        start + self.detector.cfg.kind.frame_bits() <= self.stream.len()
    }
}

impl Iterator for Tracker<'_> {
    type Item = TrackedFrame;

    fn next(&mut self) -> Option<TrackedFrame> {
        let frame_bits = self.detector.cfg.kind.frame_bits();
        loop {
            match self.next {
                None => {
                    let r = self.detector.acquire(self.stream, self.search_from);
                    if !r.locked {
                        self.search_from = self.stream.len();
                        return None;
                    }
                    self.misses = 0;
                    self.next = Some(r.frame_start_bit + frame_bits);
                    return Some(TrackedFrame {
                        start_bit: r.frame_start_bit,
                        acquired: true,
                        score: r.score_bank1,
                    });
                }
                Some(start) => {
                    if !self.frame_fits(start) {
                        return None;
                    }
                    let score = self.detector.score_at(self.stream, start).unwrap_or(0);
                    if score >= self.detector.cfg.gamma {
                        self.misses = 0;
                    } else {
                        self.misses += 1;
                        if self.misses >= MAX_CONSECUTIVE_MISSES {
                            self.losses += 1;
                            self.next = None;
                            self.search_from = start;
                            continue;
                        }
                    }
                    self.next = Some(start + frame_bits);
                    return Some(TrackedFrame {
                        start_bit: start,
                        acquired: false,
                        score,
                    });
                }
            }
        }
    }
}

fn check_gamma(n: usize, gamma: usize) -> Result<(), SyncError> {
    if gamma > n {
        return Err(SyncError::GammaOutOfRange { gamma, max: n });
    }
    Ok(())
}

fn check_p(p: f64) -> Result<(), SyncError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SyncError::ProbabilityOutOfRange(p));
    }
    Ok(())
}

/// Probability that one correlator misses a transmitted preamble: more than
/// N - gamma of its N bits flipped by a BSC with error probability `p`.
pub fn p_miss_single(n: usize, gamma: usize, p: f64) -> Result<f64, SyncError> {
    check_gamma(n, gamma)?;
    check_p(p)?;
    Ok(binomial::upper_tail(n as u64, (n - gamma + 1) as u64, p))
}

/// Probability that a preamble pair is not detected: 1 - D^2, where D is the
/// single-correlator detection probability.
pub fn p_miss(n: usize, gamma: usize, p: f64) -> Result<f64, SyncError> {
    let miss = p_miss_single(n, gamma, p)?;
    // 1 - (1 - m)^2 without cancellation.
    Ok(miss * (2.0 - miss))
}

/// Single-bank (per correlator, per byte position) and dual-bank false
/// alarm probabilities over equiprobable random data.
pub fn p_false(n: usize, gamma: usize) -> Result<(f64, f64), SyncError> {
    check_gamma(n, gamma)?;
    let q = binomial::fair_upper_tail(n as u64, gamma as u64);
    Ok((q, q * q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncProbabilities {
    pub p_miss: f64,
    pub p_false_single: f64,
    pub p_false_double: f64,
}

impl SyncProbabilities {
    pub fn new(n: usize, gamma: usize, p: f64) -> Result<Self, SyncError> {
        let (single, double) = p_false(n, gamma)?;
        Ok(SyncProbabilities {
            p_miss: p_miss(n, gamma, p)?,
            p_false_single: single,
            p_false_double: double,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub gamma: usize,
    pub p_miss: f64,
    pub p_false_single: f64,
    pub p_false_double: f64,
}

impl TradeoffRow {
    /// Probability of at least one dual-bank false alarm while the banks
    /// slide over one frame body: every byte position times every offset.
    pub fn p_false_per_frame(&self, kind: FrameKind) -> f64 {
        let trials = (kind.frame_bytes() * CORRELATORS_PER_BANK) as f64;
        -(trials * (-self.p_false_double).ln_1p()).exp_m1()
    }
}

pub fn tradeoff_table(
    kind: FrameKind,
    p: f64,
    gammas: impl IntoIterator<Item = usize>,
) -> Result<Vec<TradeoffRow>, SyncError> {
    let n = kind.preamble_bits();
    gammas
        .into_iter()
        .map(|gamma| {
            let pr = SyncProbabilities::new(n, gamma, p)?;
            Ok(TradeoffRow {
                gamma,
                p_miss: pr.p_miss,
                p_false_single: pr.p_false_single,
                p_false_double: pr.p_false_double,
            })
        })
        .collect()
}

pub const TRADEOFF_CSV_HEADER: &str = "gamma,p_miss,p_false_single,p_false_double";

pub fn tradeoff_csv(rows: &[TradeoffRow]) -> String {
    let mut out = String::from(TRADEOFF_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6e},{:.6e},{:.6e}",
            r.gamma, r.p_miss, r.p_false_single, r.p_false_double
        );
    }
    out
}

/// Trials per work unit in [`simulate_single_miss`].
const MISS_TRIALS_PER_UNIT: u64 = 10_000;

/// Monte Carlo count of single-correlator misses: the preamble of `kind` is
/// passed through a BSC `trials` times and scored against the threshold.
/// Returns the number of misses.
pub fn simulate_single_miss(
    kind: FrameKind,
    gamma: usize,
    p: f64,
    trials: u64,
    master_seed: u64,
    exec: Execution,
) -> Result<u64, SyncError> {
    check_gamma(kind.preamble_bits(), gamma)?;
    check_p(p)?;
    let preamble = gen_preamble(kind);
    let units = trials.div_ceil(MISS_TRIALS_PER_UNIT);
    let counts = exec.map_indices(units, |u| {
        let count = MISS_TRIALS_PER_UNIT.min(trials - u * MISS_TRIALS_PER_UNIT);
        let mut rng = seed::rng(seed::derive(master_seed, u));
        let mut rx = vec![0u8; preamble.len()];
        (0..count)
            .filter(|_| {
                channel::bsc_into(preamble.bits(), p, &mut rng, &mut rx);
                matches(&rx, preamble.bits()) < gamma
            })
            .count() as u64
    });
    Ok(counts.into_iter().sum())
}
