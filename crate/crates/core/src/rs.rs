//! Systematic RS(255,239) over GF(2^8).
//!
//! Generator roots are α^0 ..= α^15. Byte 0 of a codeword is the coefficient
//! of x^254, so the 239 message bytes come first and the 16 parity bytes
//! last. Decoding is syndrome computation, Berlekamp-Massey, Chien search and
//! Forney, followed by a syndrome re-check of the corrected word.

use std::sync::LazyLock;

use thiserror::Error;

use crate::gf256::{self, Gf256};

/// Codeword length in bytes.
pub const N: usize = 255;
/// Message length in bytes.
pub const K: usize = 239;
/// Parity bytes per codeword.
pub const PARITY: usize = N - K;
/// Correctable byte errors per codeword.
pub const T: usize = PARITY / 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RsError {
    #[error("expected {expected} bytes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("uncorrectable codeword")]
    Uncorrectable,
}

// Coefficients of g(x) = prod (x - α^i), highest degree first; GENERATOR[0] = 1.
static GENERATOR: LazyLock<[u8; PARITY + 1]> = LazyLock::new(|| {
    let mut g = vec![Gf256::ONE];
    for i in 0..PARITY {
        let root = Gf256::alpha_pow(i);
        let mut next = vec![Gf256::ZERO; g.len() + 1];
        for (j, &c) in g.iter().enumerate() {
            next[j] += c;
            next[j + 1] += c * root;
        }
        g = next;
    }
    let mut out = [0u8; PARITY + 1];
    for (o, c) in out.iter_mut().zip(g) {
        *o = c.0;
    }
    out
});

/// Generator polynomial coefficients, highest degree first.
pub fn generator() -> &'static [u8; PARITY + 1] {
    &GENERATOR
}

/// A full 255-byte codeword.
#[derive(Clone, PartialEq, Eq)]
pub struct RsCodeword(pub [u8; N]);

impl RsCodeword {
    pub fn as_bytes(&self) -> &[u8; N] {
        &self.0
    }

    pub fn message(&self) -> &[u8] {
        &self.0[..K]
    }

    pub fn parity(&self) -> &[u8] {
        &self.0[K..]
    }
}

impl std::fmt::Debug for RsCodeword {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("RsCodeword").field(&&self.0[..]).finish()
    }
}

/// Result of a successful decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub message: Vec<u8>,
    pub corrected: usize,
}

/// Compute the 16 parity bytes for `message` into `parity`.
fn parity_into(message: &[u8], parity: &mut [u8; PARITY]) {
    let g = &*GENERATOR;
    *parity = [0; PARITY];
    for &m in message {
        let fb = m ^ parity[0];
        for j in 0..PARITY - 1 {
            parity[j] = parity[j + 1] ^ gf256::mul(fb, g[j + 1]);
        }
        parity[PARITY - 1] = gf256::mul(fb, g[PARITY]);
    }
}

pub fn encode(message: &[u8]) -> Result<RsCodeword, RsError> {
    if message.len() != K {
        return Err(RsError::LengthMismatch {
            expected: K,
            actual: message.len(),
        });
    }
    let mut word = [0u8; N];
    word[..K].copy_from_slice(message);
    let mut parity = [0u8; PARITY];
    parity_into(message, &mut parity);
    word[K..].copy_from_slice(&parity);
    Ok(RsCodeword(word))
}

/// Syndromes S_j = r(α^j) for j in 0..16.
pub fn syndromes(word: &[u8]) -> [Gf256; PARITY] {
    let mut s = [Gf256::ZERO; PARITY];
    for (j, sj) in s.iter_mut().enumerate() {
        let root = Gf256::alpha_pow(j);
        let mut acc = Gf256::ZERO;
        for &b in word {
            acc = acc * root + Gf256(b);
        }
        *sj = acc;
    }
    s
}

/// Berlekamp-Massey. Returns the error locator (lowest degree first) and
/// the LFSR length.
fn berlekamp_massey(s: &[Gf256; PARITY]) -> (Vec<Gf256>, usize) {
    let mut c = vec![Gf256::ZERO; PARITY + 1];
    let mut b = vec![Gf256::ZERO; PARITY + 1];
    c[0] = Gf256::ONE;
    b[0] = Gf256::ONE;
    let mut len = 0usize;
    let mut shift = 1usize;
    let mut last_d = Gf256::ONE;

    for n in 0..PARITY {
        let mut d = s[n];
        for i in 1..=len {
            d += c[i] * s[n - i];
        }
        if d.is_zero() {
            shift += 1;
            continue;
        }
        let coef = d / last_d;
        if 2 * len <= n {
            let prev = c.clone();
            for i in 0..=PARITY - shift {
                c[i + shift] += coef * b[i];
            }
            len = n + 1 - len;
            b = prev;
            last_d = d;
            shift = 1;
        } else {
            for i in 0..=PARITY - shift {
                c[i + shift] += coef * b[i];
            }
            shift += 1;
        }
    }
    c.truncate(len + 1);
    (c, len)
}

fn eval_low_first(poly: &[Gf256], x: Gf256) -> Gf256 {
    poly.iter().rev().fold(Gf256::ZERO, |acc, &c| acc * x + c)
}

/// Decode a received 255-byte word, correcting up to [`T`] byte errors.
pub fn decode(received: &[u8]) -> Result<Decoded, RsError> {
    if received.len() != N {
        return Err(RsError::LengthMismatch {
            expected: N,
            actual: received.len(),
        });
    }
    let s = syndromes(received);
    if s.iter().all(|x| x.is_zero()) {
        return Ok(Decoded {
            message: received[..K].to_vec(),
            corrected: 0,
        });
    }

    let (lambda, len) = berlekamp_massey(&s);
    if len > T || lambda.last().is_none_or(|c| c.is_zero()) {
        return Err(RsError::Uncorrectable);
    }

    // Ω(x) = S(x)Λ(x) mod x^16
    let mut omega = [Gf256::ZERO; PARITY];
    for (i, &l) in lambda.iter().enumerate() {
        for j in 0..PARITY - i {
            omega[i + j] += l * s[j];
        }
    }
    // Formal derivative: only odd powers survive in characteristic 2.
    let lambda_prime: Vec<Gf256> = lambda
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| if i % 2 == 1 { c } else { Gf256::ZERO })
        .collect();

    let mut word = received.to_vec();
    let mut found = 0usize;
    for (idx, byte) in word.iter_mut().enumerate() {
        let degree = N - 1 - idx;
        let x = Gf256::alpha_pow(degree);
        let x_inv = Gf256::alpha_pow(gf256::ORDER - degree);
        if !eval_low_first(&lambda, x_inv).is_zero() {
            continue;
        }
        let denom = eval_low_first(&lambda_prime, x_inv);
        if denom.is_zero() {
            return Err(RsError::Uncorrectable);
        }
        let magnitude = x * eval_low_first(&omega, x_inv) / denom;
        *byte ^= magnitude.0;
        found += 1;
    }
    if found != len {
        return Err(RsError::Uncorrectable);
    }
    if syndromes(&word).iter().any(|x| !x.is_zero()) {
        return Err(RsError::Uncorrectable);
    }
    word.truncate(K);
    Ok(Decoded {
        message: word,
        corrected: found,
    })
}
