//! Baseband simulator for a 60 GHz single-carrier gigabit link.
//!
//! The transmit chain packs payload bytes into RS(255,239) codewords,
//! scrambles them behind a PN preamble, differentially encodes the bit
//! stream and maps it to BPSK. The receive chain demodulates by comparing
//! consecutive symbol phases, finds byte and frame alignment with two banks
//! of preamble correlators, descrambles and decodes. Around that sit the
//! channel models, the analytic synchronization probabilities, a dual-clock
//! FIFO simulation and a Monte Carlo harness.
//!
//! With the default `parallel` feature, Monte Carlo work runs on rayon.
//! Results are identical with [`Execution::Sequential`] or without the
//! feature.

pub mod binomial;
pub mod channel;
pub mod elastic;
pub mod exec;
pub mod framing;
pub mod gf256;
pub mod harness;
pub mod modem;
pub mod rs;
pub mod seed;
pub mod sync;

pub use exec::Execution;
pub use framing::{FrameKind, Framer};
pub use harness::{run_link, sweep, ChannelModel, ExperimentConfig, LinkReport};
