//! Byte/bit serialization, differential encoding, BPSK mapping and the
//! delay-and-multiply DBPSK detector.
//!
//! Bits are `u8` values 0 or 1, most significant bit of each byte first.
//! Symbols are complex baseband samples at one sample per symbol; a
//! noiseless symbol is +1 or -1 on the real axis.

use num_complex::Complex64;
use thiserror::Error;

/// Bit order used by every serializer, correlator and scrambler in the crate.
pub const MSB_FIRST: bool = true;

/// Reference symbol sent ahead of each burst so the first data bit has a
/// phase to be compared against.
pub const REFERENCE_SYMBOL: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModemError {
    #[error("need at least {needed} bits after offset, have {available}")]
    InsufficientBits { needed: usize, available: usize },
    #[error("bit offset {0} outside 0..8")]
    BadOffset(usize),
}

pub fn serialize(data: &[u8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(data.len() * 8);
    serialize_into(data, &mut bits);
    bits
}

pub fn serialize_into(data: &[u8], bits: &mut Vec<u8>) {
    for &byte in data {
        for i in (0..8).rev() {
            bits.push((byte >> i) & 1);
        }
    }
}

/// Pack bits starting at `offset` into whole bytes. Trailing bits that do
/// not fill a byte are dropped.
pub fn deserialize(bits: &[u8], offset: usize) -> Result<Vec<u8>, ModemError> {
    if offset >= 8 {
        return Err(ModemError::BadOffset(offset));
    }
    let available = bits.len().saturating_sub(offset);
    if available < 8 {
        return Err(ModemError::InsufficientBits {
            needed: 8,
            available,
        });
    }
    Ok(bits[offset..]
        .chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect())
}

/// e_k = d_k xor e_(k-1), with e_(-1) = `initial_state`.
pub fn diff_encode(bits: &[u8], initial_state: u8) -> Vec<u8> {
    let mut state = initial_state & 1;
    bits.iter()
        .map(|&d| {
            state ^= d & 1;
            state
        })
        .collect()
}

/// Inverse of [`diff_encode`].
pub fn diff_decode(bits: &[u8], initial_state: u8) -> Vec<u8> {
    let mut prev = initial_state & 1;
    bits.iter()
        .map(|&e| {
            let d = (e ^ prev) & 1;
            prev = e & 1;
            d
        })
        .collect()
}

/// 0 -> +1, 1 -> -1.
pub fn bpsk_map(bits: &[u8]) -> Vec<Complex64> {
    bits.iter().map(|&b| symbol(b)).collect()
}

#[inline]
fn symbol(bit: u8) -> Complex64 {
    if bit & 1 == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(-1.0, 0.0)
    }
}

/// Delay-and-multiply detection: bit k is 1 when Re(s_k * conj(s_(k-1))) < 0.
/// Output is one bit shorter than the input.
pub fn diff_demod(samples: &[Complex64]) -> Vec<u8> {
    samples
        .windows(2)
        .map(|w| u8::from((w[1] * w[0].conj()).re < 0.0))
        .collect()
}

/// Transmit side of the modem: differential encoding from state 0, BPSK
/// mapping, with [`REFERENCE_SYMBOL`] prepended.
pub fn modulate(bits: &[u8]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(bits.len() + 1);
    out.push(REFERENCE_SYMBOL);
    let mut state = 0u8;
    for &d in bits {
        state ^= d & 1;
        out.push(symbol(state));
    }
    out
}
