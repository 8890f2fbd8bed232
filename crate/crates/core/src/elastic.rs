//! Dual-clock FIFO with threshold start/stop flow control.
//!
//! Two free-running clocks are merged exactly: frequencies are converted to
//! integer centihertz and tick `n` of a clock at `f` happens at time `n / f`,
//! so ordering two ticks is an integer cross-multiplication. A write tick
//! and a read tick at the same instant are processed write first.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::framing::{FrameKind, CHANNEL_RATE_BPS};
use crate::seed;

/// Ethernet GMII byte clock.
pub const GMII_CLOCK_HZ: f64 = 125e6;
/// Link byte clock on the source side, 804.32 Mbit/s / 8.
pub const F1_HZ: f64 = 100.54e6;
/// Link byte clock on the coded side, 875 Mbit/s / 8.
pub const F2_HZ: f64 = CHANNEL_RATE_BPS / 8.0;

/// Smallest and largest Ethernet frame, bytes.
const MIN_ETH_FRAME: u32 = 64;
const MAX_ETH_FRAME: u32 = 1518;
/// Interframe gap plus preamble/SFD on GMII, bytes.
const ETH_GAP: u32 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FifoError {
    #[error(
        "thresholds must satisfy 0 < lower ({lower}) < upper ({upper}) < capacity ({capacity})"
    )]
    Thresholds {
        lower: usize,
        upper: usize,
        capacity: usize,
    },
    #[error("clock frequencies must be positive and finite")]
    Clock,
    #[error("duration must be positive")]
    Duration,
    #[error("gated pattern needs 0 < active <= period")]
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FifoConfig {
    pub capacity_bytes: usize,
    pub upper_threshold: usize,
    pub lower_threshold: usize,
    pub write_clock_hz: f64,
    pub read_clock_hz: f64,
    /// Write cycles between crossing the upper threshold and the writer
    /// actually stopping.
    pub resume_latency_cycles: u64,
    /// Whether the stop/start signals are honoured by the writer.
    pub flow_control: bool,
}

impl Default for FifoConfig {
    /// Transmit-side instance: GMII writes at 125 MHz, the link reads at f1.
    fn default() -> Self {
        FifoConfig {
            capacity_bytes: 4096,
            upper_threshold: 3072,
            lower_threshold: 1024,
            write_clock_hz: GMII_CLOCK_HZ,
            read_clock_hz: F1_HZ,
            resume_latency_cycles: 64,
            flow_control: true,
        }
    }
}

impl FifoConfig {
    /// Receive-side instance: the decoder writes at f2 and the GMII side
    /// reads at f1. The radio cannot be paused, so flow control is off.
    pub fn rx_side() -> Self {
        FifoConfig {
            write_clock_hz: F2_HZ,
            read_clock_hz: F1_HZ,
            flow_control: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FifoError> {
        if !(0 < self.lower_threshold
            && self.lower_threshold < self.upper_threshold
            && self.upper_threshold < self.capacity_bytes)
        {
            return Err(FifoError::Thresholds {
                lower: self.lower_threshold,
                upper: self.upper_threshold,
                capacity: self.capacity_bytes,
            });
        }
        for f in [self.write_clock_hz, self.read_clock_hz] {
            if !(f.is_finite() && f >= 0.01) {
                return Err(FifoError::Clock);
            }
        }
        Ok(())
    }

    /// Occupancy at which the reader starts.
    pub fn priming_level(&self) -> usize {
        self.capacity_bytes / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "pattern")]
pub enum WritePattern {
    /// A byte is offered on every write cycle.
    Continuous,
    /// Ethernet frames of random length (64..=1518 bytes) separated by the
    /// 20-byte GMII gap.
    Bursty,
    /// Bytes are offered on the first `active` of every `period` write
    /// cycles, as when a decoder strips parity.
    Gated { active: u32, period: u32 },
}

impl WritePattern {
    /// Long-run fraction of write cycles that offer a byte.
    pub fn duty(&self) -> f64 {
        match *self {
            WritePattern::Continuous => 1.0,
            WritePattern::Gated { active, period } => f64::from(active) / f64::from(period),
            WritePattern::Bursty => {
                let mean = f64::from(MIN_ETH_FRAME + MAX_ETH_FRAME) / 2.0;
                mean / (mean + f64::from(ETH_GAP))
            }
        }
    }

    /// Decoder output of one frame of `kind`: payload bytes out of every
    /// frame's worth of link clock cycles.
    pub fn decoder_output(kind: FrameKind) -> Self {
        WritePattern::Gated {
            active: kind.payload_bytes() as u32,
            period: kind.frame_bytes() as u32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FifoStats {
    pub max_occupancy: usize,
    pub min_occupancy_after_priming: usize,
    pub max_occupancy_after_priming: usize,
    pub overflow_events: u64,
    pub underflow_events: u64,
    pub stop_assertions: u64,
    pub output_bytes: u64,
    pub output_gaps_after_priming: u64,
    pub bytes_written: u64,
    pub final_occupancy: usize,
    pub read_cycles: u64,
    pub write_cycles: u64,
}

impl FifoStats {
    /// bytes written = bytes read + final occupancy.
    pub fn conserved(&self) -> bool {
        self.bytes_written == self.output_bytes + self.final_occupancy as u64
    }

    pub fn clean(&self) -> bool {
        self.overflow_events == 0 && self.underflow_events == 0
    }

    /// Whether post-priming occupancy stayed within the thresholds widened
    /// by the stop latency.
    pub fn within_bounds(&self, cfg: &FifoConfig) -> bool {
        let slack = cfg.resume_latency_cycles as usize;
        self.min_occupancy_after_priming + slack >= cfg.lower_threshold
            && self.max_occupancy_after_priming <= cfg.upper_threshold + slack
    }

    /// Properties that must hold for this run. Conservation always applies;
    /// bounds and gap-free output apply when flow control is on and the
    /// writer's average rate is at least the read rate.
    pub fn violations(&self, cfg: &FifoConfig, pattern: &WritePattern) -> Vec<String> {
        let mut v = Vec::new();
        if !self.conserved() {
            v.push(format!(
                "conservation: {} written, {} read, {} left",
                self.bytes_written, self.output_bytes, self.final_occupancy
            ));
        }
        if self.max_occupancy > cfg.capacity_bytes {
            v.push(format!("occupancy {} above capacity", self.max_occupancy));
        }
        let supplied = cfg.write_clock_hz * pattern.duty() >= cfg.read_clock_hz;
        if cfg.flow_control && supplied {
            if !self.clean() || self.output_gaps_after_priming > 0 {
                v.push(format!(
                    "{} overflows, {} underflows, {} output gaps",
                    self.overflow_events, self.underflow_events, self.output_gaps_after_priming
                ));
            }
            if !self.within_bounds(cfg) {
                v.push(format!(
                    "occupancy left [{}, {}] after priming",
                    self.min_occupancy_after_priming, self.max_occupancy_after_priming
                ));
            }
        }
        v
    }

    pub const CSV_HEADER: &'static str = "max_occupancy,min_occupancy_after_priming,max_occupancy_after_priming,overflow_events,underflow_events,stop_assertions,output_bytes,output_gaps_after_priming,bytes_written,final_occupancy,read_cycles,write_cycles";

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.max_occupancy,
            self.min_occupancy_after_priming,
            self.max_occupancy_after_priming,
            self.overflow_events,
            self.underflow_events,
            self.stop_assertions,
            self.output_bytes,
            self.output_gaps_after_priming,
            self.bytes_written,
            self.final_occupancy,
            self.read_cycles,
            self.write_cycles
        );
        s
    }

    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("plain struct")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Writer {
    Running,
    Stopping { remaining: u64 },
    Paused,
}

struct Source<R> {
    pattern: WritePattern,
    rng: R,
    frame_left: u32,
    gap_left: u32,
    cycle: u64,
}

impl<R: Rng> Source<R> {
    /// Advance the source by one write cycle; true if it offers a byte.
    fn offer(&mut self) -> bool {
        let cycle = self.cycle;
        self.cycle += 1;
        match self.pattern {
            WritePattern::Continuous => true,
            WritePattern::Gated { active, period } => cycle % u64::from(period) < u64::from(active),
            WritePattern::Bursty => {
                if self.gap_left > 0 {
                    self.gap_left -= 1;
                    return false;
                }
                if self.frame_left == 0 {
                    self.frame_left = self.rng.random_range(MIN_ETH_FRAME..=MAX_ETH_FRAME);
                }
                self.frame_left -= 1;
                if self.frame_left == 0 {
                    self.gap_left = ETH_GAP;
                }
                true
            }
        }
    }
}

fn centihertz(f: f64) -> u128 {
    (f * 100.0).round() as u128
}

/// Run the FIFO for `duration_cycles` read-clock cycles.
pub fn simulate_fifo(
    cfg: &FifoConfig,
    duration_cycles: u64,
    pattern: WritePattern,
    seed: u64,
) -> Result<FifoStats, FifoError> {
    cfg.validate()?;
    if duration_cycles == 0 {
        return Err(FifoError::Duration);
    }
    if let WritePattern::Gated { active, period } = pattern {
        if active == 0 || active > period {
            return Err(FifoError::Pattern);
        }
    }
    let fw = centihertz(cfg.write_clock_hz);
    let fr = centihertz(cfg.read_clock_hz);

    let mut source = Source {
        pattern,
        rng: seed::rng(seed),
        frame_left: 0,
        gap_left: 0,
        cycle: 0,
    };
    let mut writer = Writer::Running;
    let mut occ = 0usize;
    let mut primed = false;
    let mut st = FifoStats {
        min_occupancy_after_priming: usize::MAX,
        ..FifoStats::default()
    };
    let (mut nw, mut nr): (u128, u128) = (0, 0);

    while st.read_cycles < duration_cycles {
        // Write tick nw at nw/fw, read tick nr at nr/fr.
        if nw * fr <= nr * fw {
            nw += 1;
            st.write_cycles += 1;
            if writer != Writer::Paused && source.offer() {
                if occ == cfg.capacity_bytes {
                    st.overflow_events += 1;
                } else {
                    occ += 1;
                    st.bytes_written += 1;
                    st.max_occupancy = st.max_occupancy.max(occ);
                }
            }
            if cfg.flow_control {
                writer = match writer {
                    Writer::Running if occ >= cfg.upper_threshold => {
                        st.stop_assertions += 1;
                        if cfg.resume_latency_cycles == 0 {
                            Writer::Paused
                        } else {
                            Writer::Stopping {
                                remaining: cfg.resume_latency_cycles,
                            }
                        }
                    }
                    Writer::Stopping { remaining: 1 } => Writer::Paused,
                    Writer::Stopping { remaining } => Writer::Stopping {
                        remaining: remaining - 1,
                    },
                    w => w,
                };
            }
        } else {
            nr += 1;
            st.read_cycles += 1;
            if !primed && occ >= cfg.priming_level() {
                primed = true;
            }
            if primed {
                if occ > 0 {
                    occ -= 1;
                    st.output_bytes += 1;
                } else {
                    st.underflow_events += 1;
                    st.output_gaps_after_priming += 1;
                }
                st.min_occupancy_after_priming = st.min_occupancy_after_priming.min(occ);
                st.max_occupancy_after_priming = st.max_occupancy_after_priming.max(occ);
            }
            if writer == Writer::Paused && occ <= cfg.lower_threshold {
                writer = Writer::Running;
            }
        }
    }
    if !primed {
        st.min_occupancy_after_priming = 0;
    }
    st.final_occupancy = occ;
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let bad = FifoConfig {
            lower_threshold: 3000,
            upper_threshold: 2000,
            ..FifoConfig::default()
        };
        assert!(matches!(bad.validate(), Err(FifoError::Thresholds { .. })));
        let bad = FifoConfig {
            upper_threshold: 4096,
            ..FifoConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = FifoConfig {
            read_clock_hz: 0.0,
            ..FifoConfig::default()
        };
        assert_eq!(bad.validate(), Err(FifoError::Clock));
        assert_eq!(
            simulate_fifo(&FifoConfig::default(), 0, WritePattern::Continuous, 0),
            Err(FifoError::Duration)
        );
        assert_eq!(
            simulate_fifo(
                &FifoConfig::default(),
                10,
                WritePattern::Gated {
                    active: 5,
                    period: 4
                },
                0
            ),
            Err(FifoError::Pattern)
        );
    }

    #[test]
    fn balanced_clocks_hold_steady() {
        let cfg = FifoConfig {
            read_clock_hz: GMII_CLOCK_HZ,
            ..FifoConfig::default()
        };
        let st = simulate_fifo(&cfg, 100_000, WritePattern::Continuous, 0).unwrap();
        assert_eq!(
            st.min_occupancy_after_priming,
            st.max_occupancy_after_priming
        );
        assert!(st.clean() && st.conserved());
        assert_eq!(st.stop_assertions, 0);
    }

    #[test]
    fn starves_without_flow_control_when_writer_is_slow() {
        let cfg = FifoConfig {
            write_clock_hz: 90e6,
            flow_control: false,
            ..FifoConfig::default()
        };
        let st = simulate_fifo(&cfg, 1_000_000, WritePattern::Continuous, 0).unwrap();
        assert!(st.underflow_events > 0);
        assert!(st.conserved());
    }

    #[test]
    fn overflows_without_flow_control() {
        let cfg = FifoConfig {
            flow_control: false,
            ..FifoConfig::default()
        };
        let st = simulate_fifo(&cfg, 1_000_000, WritePattern::Continuous, 0).unwrap();
        assert!(st.overflow_events > 0);
        assert_eq!(st.max_occupancy, cfg.capacity_bytes);
    }

    #[test]
    fn flow_control_keeps_output_continuous() {
        let cfg = FifoConfig::default();
        for pattern in [WritePattern::Continuous, WritePattern::Bursty] {
            let st = simulate_fifo(&cfg, 2_000_000, pattern, 9).unwrap();
            assert!(st.clean(), "{pattern:?} {st:?}");
            assert_eq!(st.output_gaps_after_priming, 0);
            assert!(st.stop_assertions > 0);
            assert!(st.conserved());
            assert!(st.within_bounds(&cfg), "{pattern:?} {st:?}");
        }
    }

    #[test]
    fn zero_latency_stop() {
        let cfg = FifoConfig {
            resume_latency_cycles: 0,
            ..FifoConfig::default()
        };
        let st = simulate_fifo(&cfg, 500_000, WritePattern::Continuous, 0).unwrap();
        assert!(st.max_occupancy_after_priming <= cfg.upper_threshold);
        assert!(st.clean());
    }

    #[test]
    fn rx_side_decoder_output() {
        let cfg = FifoConfig::rx_side();
        let st = simulate_fifo(
            &cfg,
            1_000_000,
            WritePattern::decoder_output(FrameKind::P32),
            0,
        )
        .unwrap();
        assert!(st.clean() && st.conserved());
    }

    #[test]
    fn deterministic() {
        let cfg = FifoConfig::default();
        let a = simulate_fifo(&cfg, 300_000, WritePattern::Bursty, 5).unwrap();
        let b = simulate_fifo(&cfg, 300_000, WritePattern::Bursty, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.csv_row().split(',').count(),
            FifoStats::CSV_HEADER.split(',').count()
        );
        let parsed: FifoStats = serde_json::from_str(&a.json_line()).unwrap();
        assert_eq!(parsed, a);
    }
}
