//! Frame formats, preamble and scrambler sequences, and frame assembly.
//!
//! A P32 frame is a 4-byte preamble, one scrambled RS(255,239) codeword and
//! one scrambled dummy byte (260 bytes). A P64 frame is an 8-byte preamble
//! followed by two scrambled codewords (518 bytes). The preamble is never
//! scrambled, and the scrambling sequence restarts at the first byte after
//! the preamble of every frame.

use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modem;
use crate::rs::{self, RsError};

/// On-air bit rate, 3.5 GHz / 4.
pub const CHANNEL_RATE_BPS: f64 = 875e6;

/// Value of the P32 padding byte.
pub const DUMMY_BYTE: u8 = 0x00;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("payload must be {expected} bytes, got {actual}")]
    PayloadLength { expected: usize, actual: usize },
    #[error("frame must be {expected} bytes, got {actual}")]
    FrameLength { expected: usize, actual: usize },
    #[error("data length {len} is not a multiple of the {period}-byte scrambling period")]
    ScrambleLength { len: usize, period: usize },
    #[error("codeword {index} could not be decoded")]
    Uncorrectable { index: usize },
    #[error("no scrambler candidates")]
    NoCandidates,
    #[error("unknown frame kind {0:?} (expected p32 or p64)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    P32,
    P64,
}

impl FrameKind {
    pub const ALL: [FrameKind; 2] = [FrameKind::P32, FrameKind::P64];

    pub const fn preamble_bits(self) -> usize {
        match self {
            FrameKind::P32 => 32,
            FrameKind::P64 => 64,
        }
    }

    pub const fn preamble_bytes(self) -> usize {
        self.preamble_bits() / 8
    }

    pub const fn codewords(self) -> usize {
        match self {
            FrameKind::P32 => 1,
            FrameKind::P64 => 2,
        }
    }

    pub const fn payload_bytes(self) -> usize {
        self.codewords() * rs::K
    }

    pub const fn dummy_bytes(self) -> usize {
        match self {
            FrameKind::P32 => 1,
            FrameKind::P64 => 0,
        }
    }

    /// Bytes after the preamble: codewords plus padding.
    pub const fn body_bytes(self) -> usize {
        self.codewords() * rs::N + self.dummy_bytes()
    }

    pub const fn frame_bytes(self) -> usize {
        self.preamble_bytes() + self.body_bytes()
    }

    pub const fn frame_bits(self) -> usize {
        self.frame_bytes() * 8
    }

    /// Bytes held by the receive shift register: preamble, frame body, next preamble.
    pub const fn span_bytes(self) -> usize {
        self.preamble_bytes() + self.frame_bytes()
    }

    pub const fn scrambler_bytes(self) -> usize {
        self.preamble_bytes()
    }

    pub const fn channel_rate_bps(self) -> f64 {
        CHANNEL_RATE_BPS
    }

    /// Payload share of the on-air bits.
    pub fn code_rate(self) -> f64 {
        self.payload_bytes() as f64 / self.frame_bytes() as f64
    }

    pub fn source_rate_bps(self) -> f64 {
        CHANNEL_RATE_BPS * self.code_rate()
    }

    /// Threshold used when none is configured.
    pub const fn default_gamma(self) -> usize {
        match self {
            FrameKind::P32 => 28,
            FrameKind::P64 => 49,
        }
    }

    /// Byte range of codeword `index` inside a frame.
    pub const fn codeword_range(self, index: usize) -> std::ops::Range<usize> {
        let start = self.preamble_bytes() + index * rs::N;
        start..start + rs::N
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameKind::P32 => "p32",
            FrameKind::P64 => "p64",
        })
    }
}

impl FromStr for FrameKind {
    type Err = FrameError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p32" | "32" => Ok(FrameKind::P32),
            "p64" | "64" => Ok(FrameKind::P64),
            _ => Err(FrameError::UnknownKind(s.to_string())),
        }
    }
}

/// x^5 + x^2 + 1
pub const P32_PREAMBLE_POLY: u32 = 0b10_0101;
/// x^6 + x + 1
pub const P64_PREAMBLE_POLY: u32 = 0b100_0011;
/// x^5 + x^3 + 1
pub const P32_SCRAMBLER_POLY: u32 = 0b10_1001;
/// x^6 + x^5 + 1
pub const P64_SCRAMBLER_POLY: u32 = 0b110_0001;

/// One period of the Fibonacci LFSR sequence for `poly`, started from the
/// all-ones state.
///
/// `poly` is a bit mask of the feedback polynomial with bit i set for x^i.
/// The output obeys a_(n+d) = xor of a_(n+i) over the lower set bits i.
pub fn m_sequence(poly: u32) -> Vec<u8> {
    let degree = (31 - poly.leading_zeros()) as usize;
    assert!(
        (2..=31).contains(&degree) && poly & 1 == 1,
        "bad polynomial {poly:#b}"
    );
    let taps: Vec<usize> = (0..degree).filter(|&i| poly >> i & 1 == 1).collect();
    let period = (1usize << degree) - 1;
    let mut seq: Vec<u8> = vec![1; degree];
    seq.reserve(period);
    while seq.len() < period {
        let n = seq.len() - degree;
        let next = taps.iter().fold(0u8, |acc, &t| acc ^ seq[n + t]);
        seq.push(next);
    }
    seq.truncate(period);
    seq
}

fn pack_bits(bits: &[u8]) -> Vec<u8> {
    modem::deserialize(bits, 0).expect("whole bytes")
}

/// Frame preamble, identical at both ends of the link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preamble {
    bits: Vec<u8>,
}

impl Preamble {
    pub fn from_bits(bits: Vec<u8>) -> Self {
        Preamble { bits }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        pack_bits(&self.bits)
    }
}

/// Maximal-length sequence of period 2^d - 1 followed by one zero bit.
pub fn gen_preamble(kind: FrameKind) -> Preamble {
    let poly = match kind {
        FrameKind::P32 => P32_PREAMBLE_POLY,
        FrameKind::P64 => P64_PREAMBLE_POLY,
    };
    let mut bits = m_sequence(poly);
    bits.push(0);
    debug_assert_eq!(bits.len(), kind.preamble_bits());
    Preamble { bits }
}

/// Scrambling sequence applied cyclically by XOR to the frame body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScramblerSeq {
    bytes: Vec<u8>,
}

impl ScramblerSeq {
    pub fn new(bytes: Vec<u8>) -> Self {
        assert!(!bytes.is_empty());
        ScramblerSeq { bytes }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bits(&self) -> Vec<u8> {
        modem::serialize(&self.bytes)
    }
}

// Winners of `select_scrambler` over `scrambler_candidates`; the unit
// tests re-run the search and check these.
const P32_SCRAMBLER: [u8; 4] = [0xF9, 0xA4, 0x2B, 0xB0];
const P64_SCRAMBLER: [u8; 8] = [0xFD, 0x59, 0xBB, 0x49, 0xC5, 0xE5, 0x18, 0x40];

pub fn gen_scrambler_seq(kind: FrameKind) -> ScramblerSeq {
    match kind {
        FrameKind::P32 => ScramblerSeq::new(P32_SCRAMBLER.to_vec()),
        FrameKind::P64 => ScramblerSeq::new(P64_SCRAMBLER.to_vec()),
    }
}

/// Every cyclic rotation of the zero-padded scrambler m-sequence for `kind`.
pub fn scrambler_candidates(kind: FrameKind) -> Vec<ScramblerSeq> {
    let poly = match kind {
        FrameKind::P32 => P32_SCRAMBLER_POLY,
        FrameKind::P64 => P64_SCRAMBLER_POLY,
    };
    let mut base = m_sequence(poly);
    base.push(0);
    (0..base.len())
        .map(|r| {
            let mut bits = base.clone();
            bits.rotate_left(r);
            ScramblerSeq::new(pack_bits(&bits))
        })
        .collect()
}

/// Worst false-match count of `preamble` against a frame carrying all-zero
/// data scrambled with `candidate`.
///
/// The bits examined are preamble, `body_bytes` of scrambled zeros and the
/// next preamble. Every bit-shifted window is scored by agreeing bits,
/// except the two windows that sit exactly on a preamble. Windows straddling
/// a preamble edge are what make the score depend on the sequence phase.
pub fn scrambler_score(preamble: &Preamble, candidate: &ScramblerSeq, body_bytes: usize) -> usize {
    let n = preamble.len();
    let mut body = vec![0u8; body_bytes];
    xor_cyclic(&mut body, candidate);
    let mut bits = preamble.bits.clone();
    modem::serialize_into(&body, &mut bits);
    bits.extend_from_slice(&preamble.bits);
    let next = n + body_bytes * 8;
    (1..next)
        .map(|start| {
            bits[start..start + n]
                .iter()
                .zip(&preamble.bits)
                .filter(|(a, b)| a == b)
                .count()
        })
        .max()
        .unwrap_or(0)
}

/// Index and value of the candidate with the lowest [`scrambler_score`] for
/// a body of `body_bytes`; ties go to the lowest index.
pub fn select_scrambler(
    preamble: &Preamble,
    candidates: &[ScramblerSeq],
    body_bytes: usize,
) -> Result<(usize, ScramblerSeq), FrameError> {
    candidates
        .iter()
        .enumerate()
        .min_by_key(|(i, c)| (scrambler_score(preamble, c, body_bytes), *i))
        .map(|(i, c)| (i, c.clone()))
        .ok_or(FrameError::NoCandidates)
}

/// XOR `data` with the cyclically repeated sequence.
pub fn scramble(data: &[u8], seq: &ScramblerSeq) -> Result<Vec<u8>, FrameError> {
    let period = seq.bytes.len();
    if !data.len().is_multiple_of(period) {
        return Err(FrameError::ScrambleLength {
            len: data.len(),
            period,
        });
    }
    let mut out = data.to_vec();
    xor_cyclic(&mut out, seq);
    Ok(out)
}

// The P64 body (510 bytes) ends with a partial scrambling period.
fn xor_cyclic(data: &mut [u8], seq: &ScramblerSeq) {
    for (d, s) in data.iter_mut().zip(seq.bytes.iter().cycle()) {
        *d ^= s;
    }
}

/// An assembled on-air frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    kind: FrameKind,
    bytes: Vec<u8>,
}

impl Frame {
    pub fn from_bytes(kind: FrameKind, bytes: Vec<u8>) -> Result<Self, FrameError> {
        if bytes.len() != kind.frame_bytes() {
            return Err(FrameError::FrameLength {
                expected: kind.frame_bytes(),
                actual: bytes.len(),
            });
        }
        Ok(Frame { kind, bytes })
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Write the raw frame bytes, no header.
    pub fn write_file(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, &self.bytes)
    }

    pub fn read_file(kind: FrameKind, path: impl AsRef<Path>) -> io::Result<Frame> {
        let bytes = std::fs::read(path)?;
        Frame::from_bytes(kind, bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// Frame builder and parser holding the per-kind constants.
#[derive(Debug, Clone)]
pub struct Framer {
    kind: FrameKind,
    preamble: Preamble,
    preamble_bytes: Vec<u8>,
    scrambler: ScramblerSeq,
}

impl Framer {
    pub fn new(kind: FrameKind) -> Self {
        let preamble = gen_preamble(kind);
        Framer {
            kind,
            preamble_bytes: preamble.to_bytes(),
            preamble,
            scrambler: gen_scrambler_seq(kind),
        }
    }

    pub fn kind(&self) -> FrameKind {
        self.kind
    }

    pub fn preamble(&self) -> &Preamble {
        &self.preamble
    }

    pub fn scrambler(&self) -> &ScramblerSeq {
        &self.scrambler
    }

    pub fn build(&self, payload: &[u8]) -> Result<Frame, FrameError> {
        let kind = self.kind;
        if payload.len() != kind.payload_bytes() {
            return Err(FrameError::PayloadLength {
                expected: kind.payload_bytes(),
                actual: payload.len(),
            });
        }
        let mut bytes = Vec::with_capacity(kind.frame_bytes());
        bytes.extend_from_slice(&self.preamble_bytes);
        for block in payload.chunks_exact(rs::K) {
            let cw = rs::encode(block).expect("block is K bytes");
            bytes.extend_from_slice(cw.as_bytes());
        }
        bytes.extend(std::iter::repeat_n(DUMMY_BYTE, kind.dummy_bytes()));
        xor_cyclic(&mut bytes[kind.preamble_bytes()..], &self.scrambler);
        Ok(Frame { kind, bytes })
    }

    /// Descramble and decode a byte-aligned frame. Returns the payload and
    /// the total number of corrected bytes.
    pub fn parse(&self, frame: &[u8]) -> Result<(Vec<u8>, usize), FrameError> {
        let kind = self.kind;
        if frame.len() != kind.frame_bytes() {
            return Err(FrameError::FrameLength {
                expected: kind.frame_bytes(),
                actual: frame.len(),
            });
        }
        let mut body = frame[kind.preamble_bytes()..].to_vec();
        xor_cyclic(&mut body, &self.scrambler);
        let mut payload = Vec::with_capacity(kind.payload_bytes());
        let mut corrected = 0;
        for (index, cw) in body[..kind.codewords() * rs::N]
            .chunks_exact(rs::N)
            .enumerate()
        {
            match rs::decode(cw) {
                Ok(d) => {
                    payload.extend_from_slice(&d.message);
                    corrected += d.corrected;
                }
                Err(RsError::Uncorrectable) => return Err(FrameError::Uncorrectable { index }),
                Err(e) => unreachable!("{e}"),
            }
        }
        Ok((payload, corrected))
    }
}

impl Framer {
    /// Descrambled message bytes of a frame, without any error correction.
    pub fn systematic_bytes(&self, frame: &[u8]) -> Vec<u8> {
        let kind = self.kind;
        let mut body = frame[kind.preamble_bytes()..].to_vec();
        xor_cyclic(&mut body, &self.scrambler);
        body.chunks(rs::N)
            .take(kind.codewords())
            .flat_map(|cw| cw[..rs::K].iter().copied())
            .collect()
    }
}

pub fn build_frame(payload: &[u8], kind: FrameKind) -> Result<Frame, FrameError> {
    Framer::new(kind).build(payload)
}

pub fn parse_frame(frame: &Frame, kind: FrameKind) -> Result<(Vec<u8>, usize), FrameError> {
    Framer::new(kind).parse(frame.as_bytes())
}
