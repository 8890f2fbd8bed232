//! Noise and propagation: complex AWGN on symbols, a binary symmetric
//! channel on bits, DBPSK error-rate theory and a free-space 60 GHz link
//! budget.
//!
//! SNR bookkeeping: [`snr_at_distance`] returns Eb/N0 per channel bit at the
//! 875 Mbit/s line rate. [`awgn`] takes a code rate to convert an Eb/N0
//! quoted per information bit into per-symbol noise; pass 1.0 when the
//! figure is already per channel bit.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binomial;
use crate::framing::CHANNEL_RATE_BPS;
use crate::rs;
use crate::seed;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("code rate {0} outside (0, 1]")]
    CodeRate(f64),
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("distance must be positive, got {0} m")]
    Distance(f64),
    #[error("invalid link budget: {0}")]
    Budget(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub ebn0_db: f64,
    pub seed: u64,
}

/// Per-dimension noise standard deviation for unit-energy symbols.
pub fn noise_sigma(ebn0_db: f64, code_rate: f64) -> f64 {
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    (1.0 / (2.0 * code_rate * ebn0)).sqrt()
}

pub fn awgn(
    symbols: &[Complex64],
    spec: NoiseSpec,
    code_rate: f64,
) -> Result<Vec<Complex64>, ChannelError> {
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(ChannelError::CodeRate(code_rate));
    }
    let mut out = symbols.to_vec();
    let mut rng = seed::rng(spec.seed);
    add_noise(&mut out, noise_sigma(spec.ebn0_db, code_rate), &mut rng);
    Ok(out)
}

/// Add circular Gaussian noise with standard deviation `sigma` per
/// dimension.
pub fn add_noise<R: Rng + ?Sized>(samples: &mut [Complex64], sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    for s in samples {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex64::new(re * sigma, im * sigma);
    }
}

pub fn bsc(bits: &[u8], p: f64, seed: u64) -> Result<Vec<u8>, ChannelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ChannelError::Probability(p));
    }
    let mut out = vec![0u8; bits.len()];
    bsc_into(bits, p, &mut seed::rng(seed), &mut out);
    Ok(out)
}

/// Flip each bit of `bits` into `out` with probability `p`.
pub fn bsc_into<R: Rng + ?Sized>(bits: &[u8], p: f64, rng: &mut R, out: &mut [u8]) {
    for (o, &b) in out.iter_mut().zip(bits) {
        *o = b ^ u8::from(rng.random_bool(p));
    }
}

/// Bit error probability of differentially detected BPSK in AWGN,
/// 1/2 exp(-Eb/N0).
pub fn dbpsk_ber_theory(ebn0_db: f64) -> f64 {
    0.5 * (-(10f64.powf(ebn0_db / 10.0))).exp()
}

/// Post-decoding bit error rate of RS(255,239) for independent channel bit
/// errors with probability `p`: byte error rate from `p`, residual byte
/// error rate of words with more than eight byte errors, then scaled back
/// to bits.
pub fn rs_residual_ber(p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    let byte_err = -(8.0 * (-p).ln_1p()).exp_m1();
    let n = rs::N as u64;
    let ln_ps = byte_err.ln();
    let ln_qs = (-byte_err).ln_1p();
    let mut acc = binomial::CompensatedSum::default();
    for i in (rs::T as u64 + 1)..=n {
        let ln_term = binomial::ln_choose(n, i) + i as f64 * ln_ps + (n - i) as f64 * ln_qs;
        acc.add(i as f64 * ln_term.exp());
    }
    let residual_byte = acc.value() / n as f64;
    residual_byte * p / byte_err
}

/// Static free-space link between two fixed antennas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    pub extra_loss_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            tx_power_dbm: 0.0,
            tx_gain_dbi: 22.4,
            rx_gain_dbi: 22.4,
            carrier_hz: 60e9,
            bandwidth_hz: 2e9,
            noise_figure_db: 8.0,
            extra_loss_db: 0.0,
        }
    }
}

impl LinkBudget {
    /// Default budget with a body blocking the direct path.
    pub fn blocked() -> Self {
        LinkBudget {
            extra_loss_db: 15.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let finite = [
            self.tx_power_dbm,
            self.tx_gain_dbi,
            self.rx_gain_dbi,
            self.noise_figure_db,
            self.extra_loss_db,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(ChannelError::Budget("non-finite gain, power or loss"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(ChannelError::Budget("bandwidth must be positive"));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(ChannelError::Budget("carrier must be positive"));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn fspl_db(&self, distance_m: f64) -> f64 {
        20.0 * (4.0 * std::f64::consts::PI * distance_m / self.wavelength_m()).log10()
    }

    pub fn received_power_dbm(&self, distance_m: f64) -> f64 {
        self.tx_power_dbm + self.tx_gain_dbi + self.rx_gain_dbi
            - self.fspl_db(distance_m)
            - self.extra_loss_db
    }

    pub fn noise_floor_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// Eb/N0 per channel bit, in dB, at `distance_m`.
pub fn snr_at_distance(budget: &LinkBudget, distance_m: f64) -> Result<f64, ChannelError> {
    budget.validate()?;
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(ChannelError::Distance(distance_m));
    }
    let snr = budget.received_power_dbm(distance_m) - budget.noise_floor_dbm();
    Ok(snr + 10.0 * (budget.bandwidth_hz / CHANNEL_RATE_BPS).log10())
}
